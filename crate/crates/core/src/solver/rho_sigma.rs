use serde::{Deserialize, Serialize};

use crate::admissibility::check_uniqueness;
use crate::entropy::gajewski_semimetric;
use crate::error::{Error, Result};
use crate::linalg::{compensated_sum, BandMatrix};
use crate::model::CoefficientSet;

use super::coupled::{SolverConfig, MAX_HALVINGS};

/// Discretization of the drift term `σ ∇V(ρ)` at cell faces.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Drift {
    /// Arithmetic mean of the two cell values.
    #[default]
    Centered,
    /// Value from the upstream cell.
    Upwind,
}

/// Scalar laws of the decoupled system
/// `∂tρ = ΔF(ρ)`, `∂tσ = div(d(ρ)∇σ + σ∇V(ρ))`, available when the
/// uniqueness conditions hold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarLaws {
    pub alpha11: f64,
    pub beta11: f64,
    pub beta12: f64,
}

impl ScalarLaws {
    pub fn new(c: &CoefficientSet) -> Result<Self> {
        let chk = check_uniqueness(c);
        if !chk.holds {
            let violated = chk.violated_equalities();
            return Err(Error::Precondition(if violated.is_empty() {
                "existence conditions fail".to_string()
            } else {
                format!("uniqueness conditions violated: {}", violated.join(", "))
            }));
        }
        Ok(Self {
            alpha11: c.alpha[0][0],
            beta11: c.beta[0][0],
            beta12: c.beta[0][1],
        })
    }

    /// `F(ρ) = (α11 + β11ρ)²/(2β11)`, or `α11 ρ` when `β11 = 0`.
    pub fn f(&self, rho: f64) -> f64 {
        if self.beta11 == 0.0 {
            self.alpha11 * rho
        } else {
            (self.alpha11 + self.beta11 * rho).powi(2) / (2.0 * self.beta11)
        }
    }

    pub fn f_prime(&self, rho: f64) -> f64 {
        self.alpha11 + self.beta11 * rho
    }

    /// `d(ρ) = α11 + (β11 − β12)ρ`.
    pub fn d(&self, rho: f64) -> f64 {
        self.alpha11 + (self.beta11 - self.beta12) * rho
    }

    /// `V(ρ) = β12 ρ`.
    pub fn v(&self, rho: f64) -> f64 {
        self.beta12 * rho
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::Precondition(format!("rho = {rho} outside [0, 1]")))
    }
}

pub fn f_of_rho(c: &CoefficientSet, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(ScalarLaws::new(c)?.f(rho))
}

pub fn d_of_rho(c: &CoefficientSet, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(ScalarLaws::new(c)?.d(rho))
}

pub fn v_of_rho(c: &CoefficientSet, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(ScalarLaws::new(c)?.v(rho))
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// One backward-Euler step of `∂tρ = ΔF(ρ)` with zero-flux ends, solved by
/// damped Newton. Returns the new field and the iteration count.
pub fn rho_step(
    laws: &ScalarLaws,
    rho_k: &[f64],
    dx: f64,
    dt: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = rho_k.len();
    let k = dt / (dx * dx);
    let residual = |rho: &[f64]| -> Vec<f64> {
        let f: Vec<f64> = rho.iter().map(|r| laws.f(*r)).collect();
        let mut r: Vec<f64> = rho.iter().zip(rho_k).map(|(a, b)| a - b).collect();
        for j in 0..n - 1 {
            let flux = k * (f[j + 1] - f[j]);
            r[j] -= flux;
            r[j + 1] += flux;
        }
        r
    };
    let mut rho = rho_k.to_vec();
    let mut r = residual(&rho);
    let mut iters = 0;
    let mut polish = false;
    loop {
        if norm_inf(&r) <= tol {
            if polish || iters == max_iter {
                return Ok((rho, iters));
            }
            polish = true;
        } else if iters == max_iter {
            return Err(Error::NewtonFailure {
                iterations: iters,
                residual: norm_inf(&r),
            });
        }
        let mut jac = BandMatrix::zeros(n, 1, 1);
        for j in 0..n {
            jac.add(j, j, 1.0);
        }
        for j in 0..n - 1 {
            let (fl, fr) = (laws.f_prime(rho[j]), laws.f_prime(rho[j + 1]));
            jac.add(j, j, k * fl);
            jac.add(j, j + 1, -k * fr);
            jac.add(j + 1, j, -k * fl);
            jac.add(j + 1, j + 1, k * fr);
        }
        let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
        let delta = jac.solve(&rhs)?;
        iters += 1;
        let r0 = norm2(&r);
        let mut lambda = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = rho
                .iter()
                .zip(&delta)
                .map(|(a, d)| a + lambda * d)
                .collect();
            let rt = residual(&trial);
            if norm2(&rt) <= (1.0 - 1e-4 * lambda) * r0 {
                break Some((trial, rt));
            }
            lambda *= 0.5;
            if lambda < 1e-4 {
                break None;
            }
        };
        match accepted {
            Some((a, b)) => {
                rho = a;
                r = b;
            }
            None if polish => return Ok((rho, iters)),
            None => {
                return Err(Error::NewtonFailure {
                    iterations: iters,
                    residual: norm_inf(&r),
                })
            }
        }
    }
}

/// One backward-Euler step of the linear σ equation with `ρ` frozen at the
/// new time level.
pub fn sigma_step(
    laws: &ScalarLaws,
    sigma_k: &[f64],
    rho: &[f64],
    dx: f64,
    dt: f64,
    drift: Drift,
) -> Result<Vec<f64>> {
    let n = sigma_k.len();
    let k = dt / dx;
    let mut m = BandMatrix::zeros(n, 1, 1);
    for j in 0..n {
        m.add(j, j, 1.0);
    }
    // G_{j+1/2} = a_l σ_j + a_r σ_{j+1}; row j gets −k G, row j+1 gets +k G
    for j in 0..n - 1 {
        let df = 0.5 * (laws.d(rho[j]) + laws.d(rho[j + 1])) / dx;
        let dv = (laws.v(rho[j + 1]) - laws.v(rho[j])) / dx;
        let (dl, dr) = match drift {
            Drift::Centered => (0.5 * dv, 0.5 * dv),
            // velocity −dv: take σ from the left when it points right
            Drift::Upwind if dv < 0.0 => (dv, 0.0),
            Drift::Upwind => (0.0, dv),
        };
        let (al, ar) = (-df + dl, df + dr);
        m.add(j, j, -k * al);
        m.add(j, j + 1, -k * ar);
        m.add(j + 1, j, k * al);
        m.add(j + 1, j + 1, k * ar);
    }
    m.solve(sigma_k)
}

/// Discrete `H⁻¹` seminorm of `a − b`: with `e` the mean-free difference and
/// `q_{j+1/2} = Σ_{i≤j} e_i dx` the gradient of the Neumann potential,
/// returns `(Σ dx q²)^{1/2}`.
pub fn h_minus1_seminorm(a: &[f64], b: &[f64], dx: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidField("fields have different lengths".into()));
    }
    let e: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = compensated_sum(e.iter().copied()) / e.len() as f64;
    let mut q = 0.0;
    let mut faces = Vec::with_capacity(e.len());
    for v in &e[..e.len() - 1] {
        q += (v - mean) * dx;
        faces.push(dx * q * q);
    }
    Ok(compensated_sum(faces).sqrt())
}

/// State of one decoupled run.
#[derive(Clone, Debug, PartialEq)]
pub struct RhoSigmaState {
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
    pub dx: f64,
}

impl RhoSigmaState {
    /// Step both equations by `dt`: ρ first, then σ with the new ρ.
    pub fn step(
        &self,
        laws: &ScalarLaws,
        dt: f64,
        tol: f64,
        max_iter: usize,
        drift: Drift,
    ) -> Result<(Self, usize)> {
        let (rho, iters) = rho_step(laws, &self.rho, self.dx, dt, tol, max_iter)?;
        let sigma = sigma_step(laws, &self.sigma, &rho, self.dx, dt, drift)?;
        Ok((
            Self {
                rho,
                sigma,
                dx: self.dx,
            },
            iters,
        ))
    }

    pub fn masses(&self) -> [f64; 2] {
        [
            compensated_sum(self.rho.iter().map(|v| v * self.dx)),
            compensated_sum(self.sigma.iter().map(|v| v * self.dx)),
        ]
    }

    /// `u1 = (ρ+σ)/2`, `u2 = (ρ−σ)/2`.
    pub fn components(&self) -> (Vec<f64>, Vec<f64>) {
        self.rho
            .iter()
            .zip(&self.sigma)
            .map(|(r, s)| (0.5 * (r + s), 0.5 * (r - s)))
            .unzip()
    }
}

/// Per-step monitors of [`run_rho_sigma`]. `xi` and `h_minus1` compare
/// against a reference run with a hundredfold tighter Newton tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoSigmaRecord {
    pub t: f64,
    pub dt: f64,
    pub mass_rho: f64,
    pub mass_sigma: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    pub min_sigma: f64,
    /// Gajewski semimetric; NaN when σ is not positive.
    pub xi: f64,
    pub h_minus1: f64,
    pub newton_iters: usize,
}

#[derive(Clone, Debug)]
pub struct RhoSigmaOutput {
    pub state: RhoSigmaState,
    pub reference: RhoSigmaState,
    pub records: Vec<RhoSigmaRecord>,
    pub snapshots: Vec<(f64, RhoSigmaState)>,
}

fn rs_record(
    t: f64,
    dt: f64,
    s: &RhoSigmaState,
    r: &RhoSigmaState,
    iters: usize,
) -> RhoSigmaRecord {
    let m = s.masses();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    RhoSigmaRecord {
        t,
        dt,
        mass_rho: m[0],
        mass_sigma: m[1],
        min_rho: min(&s.rho),
        max_rho: s.rho.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_sigma: min(&s.sigma),
        xi: gajewski_semimetric(&s.sigma, &r.sigma, s.dx).unwrap_or(f64::NAN),
        h_minus1: h_minus1_seminorm(&s.rho, &r.rho, s.dx).unwrap_or(f64::NAN),
        newton_iters: iters,
    }
}

/// Initial `(ρ, σ)` from the configured initial data.
pub fn initial_rho_sigma(cfg: &SolverConfig) -> Result<RhoSigmaState> {
    let field = cfg
        .initial
        .realize(&cfg.grid, [1.0 / 3.0, 1.0 / 3.0], cfg.seed)?;
    let (u1, u2) = (field.u1(), field.u2());
    Ok(RhoSigmaState {
        rho: u1.iter().zip(&u2).map(|(a, b)| a + b).collect(),
        sigma: u1.iter().zip(&u2).map(|(a, b)| a - b).collect(),
        dx: field.dx(),
    })
}

/// Integrates the decoupled system. Requires the uniqueness conditions and
/// no sources.
pub fn run_rho_sigma(cfg: &SolverConfig) -> Result<RhoSigmaOutput> {
    cfg.validate()?;
    if cfg.active_sources().is_some() {
        return Err(Error::Precondition(
            "the decoupled system has no source terms".into(),
        ));
    }
    let laws = ScalarLaws::new(&cfg.coefficients)?;
    let mut state = initial_rho_sigma(cfg)?;
    let mut reference = state.clone();
    let mut records = vec![rs_record(0.0, 0.0, &state, &reference, 0)];
    let mut outputs = cfg.output_times.clone();
    outputs.sort_by(f64::total_cmp);
    let mut next_output = 0;
    let mut snapshots = Vec::new();
    let mut t = 0.0;
    let mut dt_run = cfg.dt;
    let slack = 1e-9 * cfg.dt;
    let mut snap = |t: f64, s: &RhoSigmaState, next: &mut usize| {
        while *next < outputs.len() && outputs[*next] <= t + slack {
            snapshots.push((t, s.clone()));
            *next += 1;
        }
    };
    snap(0.0, &state, &mut next_output);
    while t < cfg.t_end {
        let remaining = cfg.t_end - t;
        let truncated = remaining < dt_run;
        let mut dt = if truncated { remaining } else { dt_run };
        let mut halvings = 0;
        let (s_new, r_new, iters) = loop {
            let attempt = state
                .step(&laws, dt, cfg.newton_tol, cfg.newton_max_iter, cfg.drift)
                .and_then(|(s, it)| {
                    let (r, _) = reference.step(
                        &laws,
                        dt,
                        cfg.newton_tol * 1e-2,
                        cfg.newton_max_iter,
                        cfg.drift,
                    )?;
                    Ok((s, r, it))
                });
            match attempt {
                Ok(v) => break v,
                Err(e @ (Error::NewtonFailure { .. } | Error::SingularSystem(_))) => {
                    if halvings == MAX_HALVINGS {
                        return Err(Error::StepFailure {
                            time: t,
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
            dt_run = dt_run.min(dt);
        }
        let t_new = if truncated && halvings == 0 {
            cfg.t_end
        } else {
            t + dt
        };
        t = if cfg.t_end - t_new <= 1e-12 * cfg.dt {
            cfg.t_end
        } else {
            t_new
        };
        state = s_new;
        reference = r_new;
        records.push(rs_record(t, dt, &state, &reference, iters));
        snap(t, &state, &mut next_output);
    }
    Ok(RhoSigmaOutput {
        state,
        reference,
        records,
        snapshots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FreeParameters;
    use crate::solver::{Grid1D, InitialData};

    pub(crate) fn uniqueness_preset() -> CoefficientSet {
        CoefficientSet::from_free(FreeParameters {
            alpha11: 1.0,
            alpha22: 1.0,
            beta11: 1.0,
            beta12: 0.5,
            gamma22: 1.0,
        })
    }

    #[test]
    fn scalar_law_examples() {
        let c = uniqueness_preset();
        for rho in [0.0, 0.3, 0.7, 1.0] {
            assert!((f_of_rho(&c, rho).unwrap() - (1.0 + rho) * (1.0 + rho) / 2.0).abs() < 1e-15);
            assert!((d_of_rho(&c, rho).unwrap() - (1.0 + 0.5 * rho)).abs() < 1e-15);
            assert!((v_of_rho(&c, rho).unwrap() - 0.5 * rho).abs() < 1e-15);
        }
        let laws = ScalarLaws {
            alpha11: 2.0,
            beta11: 0.0,
            beta12: 0.0,
        };
        assert_eq!(laws.f(0.4), 0.8);
        assert!(f_of_rho(&c, 1.5).is_err());
        let skt = crate::model::SktCoefficients::new(1.0, 1.5, 1.0, 0.5, 1.0, 0.5)
            .unwrap()
            .to_general();
        assert!(matches!(f_of_rho(&skt, 0.5), Err(Error::Precondition(_))));
    }

    #[test]
    fn f_prime_and_d_positive_on_unit_interval() {
        let c = uniqueness_preset();
        let laws = ScalarLaws::new(&c).unwrap();
        for k in 0..=100 {
            let rho = k as f64 / 100.0;
            assert!(laws.f_prime(rho) >= 0.0 && laws.d(rho) > 0.0);
            let h = 1e-6;
            let fd = (laws.f((rho + h).min(1.0)) - laws.f((rho - h).max(0.0)))
                / ((rho + h).min(1.0) - (rho - h).max(0.0));
            assert!((fd - laws.f_prime(rho)).abs() < 1e-6);
        }
    }

    #[test]
    fn total_flux_collapses_to_f_prime() {
        // column sums of A(u) equal F′(u1 + u2), so ∂t(u1+u2) = div(F′(ρ)∇ρ)
        let c = uniqueness_preset();
        let laws = ScalarLaws::new(&c).unwrap();
        for (u1, u2) in [(0.1, 0.2), (0.4, 0.5), (0.05, 0.9), (0.7, 0.1)] {
            let a = c.diffusion_matrix_at(u1, u2);
            let fp = laws.f_prime(u1 + u2);
            assert!((a[(0, 0)] + a[(1, 0)] - fp).abs() < 1e-10);
            assert!((a[(0, 1)] + a[(1, 1)] - fp).abs() < 1e-10);
        }
    }

    fn cfg() -> SolverConfig {
        let mut cfg = SolverConfig::new(uniqueness_preset(), Grid1D::new(32, 1.0).unwrap());
        cfg.t_end = 0.2;
        cfg
    }

    #[test]
    fn constant_data_is_a_fixed_point() {
        let mut c = cfg();
        c.initial = InitialData::Constant { u1: 0.4, u2: 0.2 };
        let out = run_rho_sigma(&c).unwrap();
        assert!(out.state.rho.iter().all(|r| (r - 0.6).abs() < 1e-15));
        assert!(out.state.sigma.iter().all(|s| (s - 0.2).abs() < 1e-14));
    }

    #[test]
    fn masses_conserved_and_monitors_small() {
        let mut c = cfg();
        c.initial = InitialData::SinePerturbation {
            base: Some([0.45, 0.2]),
            amplitude: 0.1,
            mode: 1,
        };
        let out = run_rho_sigma(&c).unwrap();
        let m0 = &out.records[0];
        for r in &out.records {
            assert!((r.mass_rho - m0.mass_rho).abs() < 1e-13);
            assert!((r.mass_sigma - m0.mass_sigma).abs() < 1e-13);
            assert!(r.xi < 1e-8 && r.h_minus1 < 1e-8);
        }
    }

    #[test]
    fn upwind_drift_also_conserves_and_converges() {
        let mut c = cfg();
        c.drift = Drift::Upwind;
        c.initial = InitialData::Step {
            left: [0.6, 0.1],
            right: [0.3, 0.2],
            position: 0.5,
        };
        c.t_end = 2.0;
        let out = run_rho_sigma(&c).unwrap();
        let m0 = &out.records[0];
        let last = out.records.last().unwrap();
        assert!((last.mass_sigma - m0.mass_sigma).abs() < 1e-13);
        let spread = out
            .state
            .sigma
            .iter()
            .fold(0.0_f64, |m, s| m.max((s - m0.mass_sigma).abs()));
        assert!(spread < 1e-3);
    }

    #[test]
    fn h_minus1_examples() {
        let dx = 0.25;
        assert_eq!(h_minus1_seminorm(&[1.0; 4], &[1.0; 4], dx).unwrap(), 0.0);
        // e = (1, −1, 0, 0): q = (0.25, 0, 0)
        let v = h_minus1_seminorm(&[1.0, -1.0, 0.0, 0.0], &[0.0; 4], dx).unwrap();
        assert!((v - (0.25f64 * 0.25 * 0.25).sqrt()).abs() < 1e-15);
        // constant shifts are removed
        let a = [0.3, 0.5, 0.2, 0.1];
        let b: Vec<f64> = a.iter().map(|x| x + 7.0).collect();
        assert!(h_minus1_seminorm(&a, &b, dx).unwrap() < 1e-14);
    }
}
