use serde::{Deserialize, Serialize};

use crate::entropy::{
    entropy_functional, fisher_information, from_entropy_vars_at, mobility_at,
    mobility_derivatives_at, relative_phi, to_entropy_vars, ReferenceDensity, StateField,
};
use crate::error::{Error, Result};
use crate::linalg::{compensated_sum, BandMatrix, Mat2, Vec2};
use crate::model::{
    entropy_hessian_inverse_at, CoefficientSet, LotkaVolterra, SimplexState, SteadyState,
};

use super::initial::project_to_simplex;
use super::{Drift, Grid1D, InitialData};

/// Cells entering a step are clamped to this minimum component.
pub const ENTRY_MARGIN: f64 = 1e-9;
/// Largest number of consecutive step halvings before a run gives up.
pub const MAX_HALVINGS: usize = 10;

const ARMIJO: f64 = 1e-4;
const MIN_DAMPING: f64 = 1e-4;

/// Everything a simulation needs. Serialized verbatim into run manifests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub coefficients: CoefficientSet,
    pub sources: Option<LotkaVolterra>,
    pub grid: Grid1D,
    pub dt: f64,
    pub t_end: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub regularization: f64,
    pub initial: InitialData,
    pub seed: u64,
    pub output_times: Vec<f64>,
    pub drift: Drift,
}

impl SolverConfig {
    pub fn new(coefficients: CoefficientSet, grid: Grid1D) -> Self {
        Self {
            coefficients,
            sources: None,
            grid,
            dt: 1e-2,
            t_end: 1.0,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            regularization: 0.0,
            initial: InitialData::default(),
            seed: 0,
            output_times: Vec::new(),
            drift: Drift::Centered,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.coefficients.validate()?;
        let positive = [
            ("dt", self.dt),
            ("t_end", self.t_end),
            ("newton.tol", self.newton_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.newton_max_iter == 0 {
            return Err(Error::Config("newton.max_iter must be at least 1".into()));
        }
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            return Err(Error::Config(format!(
                "regularization must be nonnegative, got {}",
                self.regularization
            )));
        }
        if let Some(t) = self
            .output_times
            .iter()
            .find(|t| !(**t >= 0.0 && t.is_finite()))
        {
            return Err(Error::Config(format!("invalid output time {t}")));
        }
        Ok(())
    }

    /// Sources, or `None` when absent or identically zero.
    pub fn active_sources(&self) -> Option<&LotkaVolterra> {
        self.sources.as_ref().filter(|lv| !lv.is_zero())
    }
}

/// Outcome of one accepted implicit step.
#[derive(Clone, Debug)]
pub struct StepReport {
    pub state: StateField,
    pub newton_iters: usize,
    /// Cells raised to [`ENTRY_MARGIN`] before the step.
    pub clipped: usize,
}

struct CellEval {
    u: Vec2,
    /// `du/dw = h″(u)⁻¹`
    m: Mat2,
    b: Mat2,
    /// `∂B/∂w_1`, `∂B/∂w_2`
    dbw: [Mat2; 2],
    f: Vec2,
    /// `∂f/∂w`
    jfw: Mat2,
}

/// One backward-Euler step of the finite-volume system in entropy variables.
struct Scheme<'a> {
    c: &'a CoefficientSet,
    lv: Option<&'a LotkaVolterra>,
    ubar: &'a ReferenceDensity,
    dx: f64,
    dt: f64,
    reg: f64,
}

impl Scheme<'_> {
    fn evaluate(&self, w: &[f64], with_jacobian: bool) -> Option<Vec<CellEval>> {
        w.chunks_exact(2)
            .map(|wc| {
                let (u1, u2) = from_entropy_vars_at(wc[0], wc[1], self.ubar);
                if !(u1 > 0.0 && u2 > 0.0 && 1.0 - u1 - u2 > 0.0) {
                    return None;
                }
                let m = entropy_hessian_inverse_at(u1, u2);
                let b = mobility_at(self.c, u1, u2);
                let dbw = if with_jacobian {
                    let dbu = mobility_derivatives_at(self.c, u1, u2);
                    [0, 1].map(|k| dbu[0] * m[(0, k)] + dbu[1] * m[(1, k)])
                } else {
                    [Mat2::zeros(); 2]
                };
                let (f, jfw) = match self.lv {
                    Some(lv) => (lv.source_at(u1, u2), lv.source_jacobian_at(u1, u2) * m),
                    None => (Vec2::zeros(), Mat2::zeros()),
                };
                Some(CellEval {
                    u: Vec2::new(u1, u2),
                    m,
                    b,
                    dbw,
                    f,
                    jfw,
                })
            })
            .collect()
    }

    fn face_operator(&self, l: &CellEval, r: &CellEval) -> Mat2 {
        (l.b + r.b) * 0.5 + Mat2::identity() * self.reg
    }

    fn residual(&self, ev: &[CellEval], w: &[f64], uk: &[Vec2]) -> Vec<f64> {
        let n = ev.len();
        let mut r = vec![0.0; 2 * n];
        for i in 0..n {
            let ri = (ev[i].u - uk[i]) * self.dx - ev[i].f * (self.dt * self.dx);
            r[2 * i] = ri[0];
            r[2 * i + 1] = ri[1];
        }
        for j in 0..n - 1 {
            let g = Vec2::new(w[2 * j + 2] - w[2 * j], w[2 * j + 3] - w[2 * j + 1]) / self.dx;
            let flux = self.face_operator(&ev[j], &ev[j + 1]) * g * self.dt;
            r[2 * j] -= flux[0];
            r[2 * j + 1] -= flux[1];
            r[2 * j + 2] += flux[0];
            r[2 * j + 3] += flux[1];
        }
        r
    }

    fn jacobian(&self, ev: &[CellEval], w: &[f64]) -> BandMatrix {
        let n = ev.len();
        let mut jac = BandMatrix::zeros(2 * n, 3, 3);
        for (i, e) in ev.iter().enumerate() {
            jac.add_block(i, i, &((e.m - e.jfw * self.dt) * self.dx));
        }
        for j in 0..n - 1 {
            let g = Vec2::new(w[2 * j + 2] - w[2 * j], w[2 * j + 3] - w[2 * j + 1]) / self.dx;
            let bf = self.face_operator(&ev[j], &ev[j + 1]);
            let half_d = |e: &CellEval| Mat2::from_columns(&[e.dbw[0] * g, e.dbw[1] * g]) * 0.5;
            // derivatives of the flux through face j+1/2
            let d_left = -bf / self.dx + half_d(&ev[j]);
            let d_right = bf / self.dx + half_d(&ev[j + 1]);
            // R_j gets −τ F, R_{j+1} gets +τ F
            jac.add_block(j, j, &(-d_left * self.dt));
            jac.add_block(j, j + 1, &(-d_right * self.dt));
            jac.add_block(j + 1, j, &(d_left * self.dt));
            jac.add_block(j + 1, j + 1, &(d_right * self.dt));
        }
        jac
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Solves one backward-Euler step from `u_k` with step `dt` by damped Newton
/// in the entropy variables relative to `ubar`. The returned state lies in
/// the open triangle by construction.
pub fn step(
    u_k: &StateField,
    cfg: &SolverConfig,
    ubar: &ReferenceDensity,
    dt: f64,
) -> Result<StepReport> {
    let dx = u_k.dx();
    let n = u_k.len();
    if n < 2 {
        return Err(Error::InvalidField("a step needs at least 2 cells".into()));
    }
    let mut clipped = 0;
    let uk: Vec<Vec2> = u_k
        .cells()
        .iter()
        .map(|c| {
            if c.min_component() < ENTRY_MARGIN {
                clipped += 1;
                let (a, b) = project_to_simplex(c.u1(), c.u2(), ENTRY_MARGIN);
                Vec2::new(a, b)
            } else {
                c.as_vec()
            }
        })
        .collect();
    let scheme = Scheme {
        c: &cfg.coefficients,
        lv: cfg.active_sources(),
        ubar,
        dx,
        dt,
        reg: cfg.regularization,
    };
    let mut w = Vec::with_capacity(2 * n);
    for u in &uk {
        let p = to_entropy_vars(&SimplexState::new_unchecked(u[0], u[1]), ubar)?;
        w.push(p.w1);
        w.push(p.w2);
    }
    let mut ev = scheme
        .evaluate(&w, true)
        .ok_or_else(|| Error::InvalidField("initial state has a vanishing component".into()))?;
    let mut r = scheme.residual(&ev, &w, &uk);
    let mut iters = 0;
    let mut converged = false;
    // one extra Newton step after the tolerance is met drives the residual
    // to rounding level, which is what keeps masses conserved per step
    let mut polish = false;
    while iters < cfg.newton_max_iter + 1 {
        if norm_inf(&r) / dx <= cfg.newton_tol {
            if polish || iters == cfg.newton_max_iter {
                converged = true;
                break;
            }
            polish = true;
        } else if iters == cfg.newton_max_iter {
            break;
        }
        let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
        let delta = scheme.jacobian(&ev, &w).solve(&rhs)?;
        iters += 1;
        let r0 = norm2(&r);
        let mut lambda = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = w.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect();
            if let Some(ev_t) = scheme.evaluate(&trial, true) {
                let r_t = scheme.residual(&ev_t, &trial, &uk);
                if norm2(&r_t) <= (1.0 - ARMIJO * lambda) * r0 {
                    break Some((trial, ev_t, r_t));
                }
            }
            lambda *= 0.5;
            if lambda < MIN_DAMPING {
                break None;
            }
        };
        match accepted {
            Some((wn, evn, rn)) => {
                w = wn;
                ev = evn;
                r = rn;
            }
            None if polish => {
                // already within tolerance; the polish step just made no progress
                converged = true;
                break;
            }
            None => {
                return Err(Error::NewtonFailure {
                    iterations: iters,
                    residual: norm_inf(&r) / dx,
                })
            }
        }
    }
    if !converged {
        return Err(Error::NewtonFailure {
            iterations: iters,
            residual: norm_inf(&r) / dx,
        });
    }
    let cells = ev
        .iter()
        .map(|e| SimplexState::new_unchecked(e.u[0], e.u[1]))
        .collect();
    Ok(StepReport {
        state: StateField::from_cells_unchecked(cells, dx),
        newton_iters: iters,
        clipped,
    })
}

/// Monitors recorded after every accepted step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub dt: f64,
    pub entropy: f64,
    /// Relative entropy to the steady state; NaN without sources.
    pub phi: f64,
    pub mass: [f64; 2],
    pub min_u: [f64; 2],
    pub max_u: [f64; 2],
    pub min_sum: f64,
    pub max_sum: f64,
    pub fisher: [f64; 2],
    pub newton_iters: usize,
    pub clipped: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub regularization: f64,
    pub records: Vec<Record>,
}

impl TimeSeries {
    /// Largest one-step increase of the entropy (negative when it always
    /// decreased strictly).
    pub fn max_entropy_increase(&self) -> f64 {
        self.records
            .windows(2)
            .map(|p| p[1].entropy - p[0].entropy)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_phi_increase(&self) -> f64 {
        self.records
            .windows(2)
            .map(|p| p[1].phi - p[0].phi)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn total_clipped(&self) -> usize {
        self.records.iter().map(|r| r.clipped).sum()
    }
}

/// L² distance `(∫ |u − U|²)^{1/2}`.
pub fn l2_distance_to(field: &StateField, u: [f64; 2]) -> f64 {
    let dx = field.dx();
    compensated_sum(
        field
            .cells()
            .iter()
            .map(|c| dx * ((c.u1() - u[0]).powi(2) + (c.u2() - u[1]).powi(2))),
    )
    .sqrt()
}

/// L² distance between two fields on the same grid.
pub fn l2_distance(a: &[f64], b: &[f64], dx: f64) -> f64 {
    compensated_sum(a.iter().zip(b).map(|(x, y)| dx * (x - y) * (x - y))).sqrt()
}

fn record(
    field: &StateField,
    t: f64,
    dt: f64,
    ubar: &ReferenceDensity,
    steady: Option<&SteadyState>,
    iters: usize,
    clipped: usize,
) -> Record {
    let u1 = field.u1();
    let u2 = field.u2();
    let ones = vec![1.0; u1.len()];
    let sums: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a + b).collect();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let fi = |v: &[f64]| fisher_information(v, &ones, field.dx()).unwrap_or(f64::NAN);
    Record {
        t,
        dt,
        entropy: entropy_functional(field, ubar),
        phi: steady.map_or(f64::NAN, |s| relative_phi(field, s)),
        mass: field.masses(),
        min_u: [min(&u1), min(&u2)],
        max_u: [max(&u1), max(&u2)],
        min_sum: min(&sums),
        max_sum: max(&sums),
        fisher: [fi(&u1), fi(&u2)],
        newton_iters: iters,
        clipped,
    }
}

/// A field written at a requested output time.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: StateField,
}

/// Everything a finished coupled run produces.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub final_state: StateField,
    pub series: TimeSeries,
    pub snapshots: Vec<Snapshot>,
    pub steady: Option<SteadyState>,
    pub reference: ReferenceDensity,
    pub final_dt: f64,
    pub halvings: usize,
}

impl RunOutput {
    pub fn final_l2_to_steady(&self) -> Option<f64> {
        self.steady
            .map(|s| l2_distance_to(&self.final_state, [s.u1, s.u2]))
    }
}

/// Time stepper for the coupled system. Keeps its state between steps so a
/// caller can inspect or dump it after a failure.
#[derive(Clone, Debug)]
pub struct CoupledSolver {
    cfg: SolverConfig,
    reference: ReferenceDensity,
    steady: Option<SteadyState>,
    state: StateField,
    t: f64,
    dt: f64,
    halvings: usize,
    series: TimeSeries,
    snapshots: Vec<Snapshot>,
    outputs: Vec<f64>,
    next_output: usize,
}

impl CoupledSolver {
    pub fn new(cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let steady = match cfg.active_sources() {
            Some(lv) => {
                let eps = lv.edge_margins();
                if eps.iter().any(|e| !(*e >= 0.0)) {
                    return Err(Error::Precondition(format!(
                        "source terms are not nonpositive near u1 + u2 = 1 (edge margins {eps:?})"
                    )));
                }
                let s = lv.steady_state()?;
                if !s.is_interior() {
                    return Err(Error::Precondition(format!(
                        "steady state ({}, {}) is not inside the triangle",
                        s.u1, s.u2
                    )));
                }
                Some(s)
            }
            None => None,
        };
        let base = steady.map_or([1.0 / 3.0, 1.0 / 3.0], |s| [s.u1, s.u2]);
        let state = cfg.initial.realize(&cfg.grid, base, cfg.seed)?;
        let reference = match &steady {
            Some(s) => ReferenceDensity::from_steady_state(s)?,
            None => {
                let m = state.masses();
                let l = cfg.grid.length();
                ReferenceDensity::new(m[0] / l, m[1] / l)?
            }
        };
        let mut outputs = cfg.output_times.clone();
        outputs.sort_by(f64::total_cmp);
        let mut solver = Self {
            dt: cfg.dt,
            series: TimeSeries {
                regularization: cfg.regularization,
                records: vec![record(&state, 0.0, 0.0, &reference, steady.as_ref(), 0, 0)],
            },
            cfg,
            reference,
            steady,
            state,
            t: 0.0,
            halvings: 0,
            snapshots: Vec::new(),
            outputs,
            next_output: 0,
        };
        solver.take_snapshots();
        Ok(solver)
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn state(&self) -> &StateField {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn series(&self) -> &TimeSeries {
        &self.series
    }

    pub fn reference(&self) -> &ReferenceDensity {
        &self.reference
    }

    pub fn steady(&self) -> Option<&SteadyState> {
        self.steady.as_ref()
    }

    pub fn is_finished(&self) -> bool {
        self.t >= self.cfg.t_end
    }

    fn take_snapshots(&mut self) {
        let slack = 1e-9 * self.cfg.dt;
        while self.next_output < self.outputs.len()
            && self.outputs[self.next_output] <= self.t + slack
        {
            self.snapshots.push(Snapshot {
                t: self.t,
                field: self.state.clone(),
            });
            self.next_output += 1;
        }
    }

    /// Takes one accepted step, halving the step size on Newton failure up
    /// to [`MAX_HALVINGS`] times. A reduced step size is kept for the rest
    /// of the run.
    pub fn advance(&mut self) -> Result<()> {
        let remaining = self.cfg.t_end - self.t;
        let truncated = remaining < self.dt;
        let mut dt = if truncated { remaining } else { self.dt };
        let mut halvings = 0;
        let report = loop {
            match step(&self.state, &self.cfg, &self.reference, dt) {
                Ok(r) => break r,
                Err(e @ (Error::NewtonFailure { .. } | Error::SingularSystem(_))) => {
                    if halvings == MAX_HALVINGS {
                        return Err(Error::StepFailure {
                            time: self.t,
                            halvings,
                            reason: e.to_string(),
                        });
                    }
                    halvings += 1;
                    dt *= 0.5;
                }
                Err(e) => return Err(e),
            }
        };
        if halvings > 0 {
            self.halvings += halvings;
            self.dt = self.dt.min(dt);
        }
        let t_new = if truncated && halvings == 0 {
            self.cfg.t_end
        } else {
            self.t + dt
        };
        if let Some(i) = report
            .state
            .cells()
            .iter()
            .position(|c| !(c.in_closure() && c.min_component() > 0.0))
        {
            return Err(Error::BoundViolation {
                time: t_new,
                cell: i,
            });
        }
        self.state = report.state;
        // guard against a sliver of a step from accumulated rounding
        self.t = if self.cfg.t_end - t_new <= 1e-12 * self.cfg.dt {
            self.cfg.t_end
        } else {
            t_new
        };
        self.series.records.push(record(
            &self.state,
            self.t,
            dt,
            &self.reference,
            self.steady.as_ref(),
            report.newton_iters,
            report.clipped,
        ));
        self.take_snapshots();
        Ok(())
    }

    pub fn run_to_end(&mut self) -> Result<()> {
        while !self.is_finished() {
            self.advance()?;
        }
        Ok(())
    }

    pub fn into_output(self) -> RunOutput {
        RunOutput {
            final_state: self.state,
            series: self.series,
            snapshots: self.snapshots,
            steady: self.steady,
            reference: self.reference,
            final_dt: self.dt,
            halvings: self.halvings,
        }
    }
}

/// Integrates the coupled system to `cfg.t_end`.
pub fn run(cfg: &SolverConfig) -> Result<RunOutput> {
    let mut s = CoupledSolver::new(cfg.clone())?;
    s.run_to_end()?;
    Ok(s.into_output())
}
