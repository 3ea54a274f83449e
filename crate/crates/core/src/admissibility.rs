//! Parameter conditions for bounded weak solutions, convergence to the
//! constant steady state and uniqueness, each evaluated exactly with signed
//! margins, plus sampled quadratic-form oracles that confirm or refute the
//! exact verdicts independently.
//!
//! Equalities are tested with absolute tolerance [`EQ_TOL`]. Strict
//! inequalities need a margin `> 0` with no slack; non-strict ones `≥ 0`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{is_psd, max_abs, min_eig_sym, sym_part, Mat2, Vec2};
use crate::model::{
    entropy_hessian_at, CoefficientSet, LotkaVolterra, SktCoefficients, SteadyState,
};

/// Absolute tolerance on equality conditions.
pub const EQ_TOL: f64 = 1e-12;
/// Smallest density component produced by the samplers.
pub const SAMPLE_FLOOR: f64 = 1e-6;
/// Size of the vertex and edge neighbourhoods used for stratified sampling.
pub const STRATUM_RADIUS: f64 = 1e-3;
/// A quadratic form is reported negative below `−PSD_TOL · max(1, |M|)`.
pub const PSD_TOL: f64 = 1e-10;

const CHUNK: usize = 4096;

/// Verdict of one condition with its margins (positive means satisfied) and
/// the absolute residuals of its equalities.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub holds: bool,
    pub margins: BTreeMap<String, f64>,
    pub residuals: BTreeMap<String, f64>,
}

impl ConditionCheck {
    fn margin(mut self, name: &str, v: f64) -> Self {
        self.margins.insert(name.to_string(), v);
        self
    }

    fn residual(mut self, name: &str, v: f64) -> Self {
        self.residuals.insert(name.to_string(), v);
        self
    }

    fn equalities_hold(&self) -> bool {
        self.residuals.values().all(|r| *r <= EQ_TOL)
    }

    /// Names of equalities whose residual exceeds [`EQ_TOL`].
    pub fn violated_equalities(&self) -> Vec<String> {
        self.residuals
            .iter()
            .filter(|(_, r)| **r > EQ_TOL)
            .map(|(k, _)| k.clone())
            .collect()
    }
}

/// Structure conditions `α12 = α21 = β21 = γ12 = 0`,
/// `β22 = β11 − γ21`, `γ11 = γ22 − β12`, `γ21 = α22 − α11 + β12`, which make
/// `h″(u)A(u)` symmetric.
pub fn check_structural_symmetry(c: &CoefficientSet) -> ConditionCheck {
    let (al, be, ga) = (&c.alpha, &c.beta, &c.gamma);
    let mut out = ConditionCheck::default()
        .residual("alpha12", al[0][1].abs())
        .residual("alpha21", al[1][0].abs())
        .residual("beta21", be[1][0].abs())
        .residual("gamma12", ga[0][1].abs())
        .residual("beta22", (be[1][1] - (be[0][0] - ga[1][0])).abs())
        .residual("gamma11", (ga[0][0] - (ga[1][1] - be[0][1])).abs())
        .residual(
            "gamma21",
            (ga[1][0] - (al[1][1] - al[0][0] + be[0][1])).abs(),
        );
    out.holds = out.equalities_hold();
    out
}

fn inequality_margins(c: &CoefficientSet) -> [(&'static str, f64); 5] {
    let p = c.free_parameters();
    [
        ("alpha11", p.alpha11),
        ("alpha22", p.alpha22),
        ("cross", p.alpha11 + p.beta11.min(p.gamma22) - p.beta12),
        ("diag1", p.alpha11 + p.beta11),
        ("diag2", p.alpha22 + p.gamma22),
    ]
}

/// Conditions for global bounded weak solutions: structural symmetry and
/// `α11 > 0`, `α22 > 0`, `β12 < α11 + min{β11, γ22}`, `α11 + β11 ≥ 0`,
/// `α22 + γ22 ≥ 0`.
pub fn check_existence(c: &CoefficientSet) -> ConditionCheck {
    let sym = check_structural_symmetry(c);
    let mut out = ConditionCheck {
        residuals: sym.residuals,
        ..Default::default()
    };
    let m = inequality_margins(c);
    for (name, v) in m {
        out.margins.insert(name.to_string(), v);
    }
    out.holds =
        sym.holds && m[0].1 > 0.0 && m[1].1 > 0.0 && m[2].1 > 0.0 && m[3].1 >= 0.0 && m[4].1 >= 0.0;
    out
}

fn require_symmetry(c: &CoefficientSet) -> Result<()> {
    let sym = check_structural_symmetry(c);
    if sym.holds {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "structural symmetry violated: {}",
            sym.violated_equalities().join(", ")
        )))
    }
}

/// Non-strict version of the existence inequalities, which characterizes
/// positive semidefiniteness of `h″(u)A(u)` on the whole triangle.
pub fn check_psd_characterization(c: &CoefficientSet) -> Result<ConditionCheck> {
    require_symmetry(c)?;
    let mut out = ConditionCheck::default();
    let m = inequality_margins(c);
    for (name, v) in m {
        out.margins.insert(name.to_string(), v);
    }
    out.holds = m.iter().all(|(_, v)| *v >= 0.0);
    Ok(out)
}

/// Largest `ε` for which `zᵀ h″A z ≥ ε (z1²/u1 + z2²/u2)` on the triangle:
/// the shifted set `(α11−ε, α22−ε, β11+ε, β12+ε, γ22+ε)` must still satisfy
/// the semidefiniteness characterization, giving
/// `ε = min{α11, α22, α11 + min{β11, γ22} − β12}`.
pub fn coercivity_epsilon(c: &CoefficientSet) -> Result<f64> {
    let psd = check_psd_characterization(c)?;
    if !psd.holds {
        return Err(Error::Precondition(
            "h''A is not positive semidefinite on the triangle".into(),
        ));
    }
    let m = inequality_margins(c);
    Ok(m[0].1.min(m[1].1).min(m[2].1).max(0.0))
}

/// Limits of `s·H(u)A(u)` as `u` approaches the three vertices along
/// `(s,s)`, `(1−2s, s)` and `(s, 1−2s)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VertexMatrices {
    pub f1: Mat2,
    pub f2: Mat2,
    pub f3: Mat2,
    pub det_f2: f64,
    pub det_f3: f64,
}

pub fn vertex_limits(c: &CoefficientSet) -> Result<VertexMatrices> {
    require_symmetry(c)?;
    let p = c.free_parameters();
    let d1 = p.alpha11 + p.beta11;
    let d2 = p.alpha22 + p.gamma22;
    Ok(VertexMatrices {
        f1: Mat2::new(p.alpha11, 0.0, 0.0, p.alpha22),
        f2: Mat2::new(d1, d1, d1, 2.0 * d1 - p.beta12),
        f3: Mat2::new(
            p.alpha11 + p.alpha22 + 2.0 * p.gamma22 - p.beta12,
            d2,
            d2,
            d2,
        ),
        det_f2: d1 * (d1 - p.beta12),
        det_f3: d2 * (p.alpha11 + p.gamma22 - p.beta12),
    })
}

/// Determinant of the (constant) Hessian of `u ↦ det A(u)`:
/// `−(β11 β12 + γ22 (α11 − α22 − β12))² ≤ 0`.
pub fn det_hessian_det_a(c: &CoefficientSet) -> Result<f64> {
    require_symmetry(c)?;
    let p = c.free_parameters();
    let s = p.beta11 * p.beta12 + p.gamma22 * (p.alpha11 - p.alpha22 - p.beta12);
    // + 0.0 turns −0 into 0
    Ok(-(s * s) + 0.0)
}

/// A point of the triangle and a direction where a quadratic form was
/// evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub u: [f64; 2],
    pub z: [f64; 2],
    pub value: f64,
}

/// Result of a sampled oracle: the verdict, the extreme sample, and the
/// number of points examined.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOutcome {
    pub holds: bool,
    pub extreme: Witness,
    pub samples: usize,
}

impl OracleOutcome {
    pub fn witness(&self) -> Option<Witness> {
        (!self.holds).then_some(self.extreme)
    }
}

/// Draws the `index`-th point of the stratified design: indices cycle through
/// uniform points in the triangle, points within [`STRATUM_RADIUS`] of a
/// vertex, and points within [`STRATUM_RADIUS`] of an edge. Every component is
/// at least [`SAMPLE_FLOOR`].
pub fn stratified_point<R: Rng>(rng: &mut R, index: usize) -> (f64, f64) {
    match index % 3 {
        0 => loop {
            let (mut a, mut b): (f64, f64) = (rng.random(), rng.random());
            if a + b > 1.0 {
                a = 1.0 - a;
                b = 1.0 - b;
            }
            if a.min(b).min(1.0 - a - b) >= SAMPLE_FLOOR {
                return (a, b);
            }
        },
        1 => {
            // log-uniform distance so the approach direction and scale both vary
            let vertex = rng.random_range(0..3usize);
            let r =
                10f64.powf(rng.random_range((2.0 * SAMPLE_FLOOR).log10()..STRATUM_RADIUS.log10()));
            let t: f64 = rng.random();
            let p = (r * t).max(SAMPLE_FLOOR);
            let q = (r * (1.0 - t)).max(SAMPLE_FLOOR);
            let mut bary = [p, q, p];
            let others: Vec<usize> = (0..3).filter(|k| *k != vertex).collect();
            bary[others[0]] = p;
            bary[others[1]] = q;
            bary[vertex] = 1.0 - p - q;
            (bary[0], bary[1])
        }
        _ => {
            let edge = rng.random_range(0..3usize);
            let s = 10f64.powf(rng.random_range(SAMPLE_FLOOR.log10()..STRATUM_RADIUS.log10()));
            let t: f64 = rng.random();
            let mut a = ((1.0 - s) * t).max(SAMPLE_FLOOR);
            let mut b = 1.0 - s - a;
            if b < SAMPLE_FLOOR {
                b = SAMPLE_FLOOR;
                a = 1.0 - s - b;
            }
            let mut bary = [0.0; 3];
            let others: Vec<usize> = (0..3).filter(|k| *k != edge).collect();
            bary[edge] = s;
            bary[others[0]] = a;
            bary[others[1]] = b;
            (bary[0], bary[1])
        }
    }
}

/// Evaluates `score(u1, u2) -> (score, raw value, direction)` on `n`
/// stratified samples (sharded over threads, deterministic per seed) and
/// returns the sample with the smallest score.
fn sample_minimum<F>(n: usize, seed: u64, score: F) -> (f64, Witness)
where
    F: Fn(f64, f64) -> (f64, f64, Vec2) + Sync,
{
    let chunks = n.div_ceil(CHUNK).max(1);
    let best = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let start = chunk * CHUNK;
            let end = ((chunk + 1) * CHUNK).min(n);
            let mut best = (
                f64::INFINITY,
                Witness {
                    u: [f64::NAN; 2],
                    z: [f64::NAN; 2],
                    value: f64::INFINITY,
                },
            );
            for i in start..end {
                let (u1, u2) = stratified_point(&mut rng, i);
                let (s, raw, z) = score(u1, u2);
                if s < best.0 {
                    best = (
                        s,
                        Witness {
                            u: [u1, u2],
                            z: [z[0], z[1]],
                            value: raw,
                        },
                    );
                }
            }
            best
        })
        .collect::<Vec<_>>();
    // fixed order so the reported extreme does not depend on scheduling
    best.into_iter()
        .fold(None::<(f64, Witness)>, |acc, b| match acc {
            Some(a) if a.0 <= b.0 => Some(a),
            _ => Some(b),
        })
        .expect("at least one chunk")
}

/// `H(u)A(u)` at an interior point.
#[inline]
pub fn ha_at(c: &CoefficientSet, u1: f64, u2: f64) -> Mat2 {
    entropy_hessian_at(u1, u2) * c.diffusion_matrix_at(u1, u2)
}

/// Searches for `(u, z)` with `zᵀ H(u)A(u) z < 0` among `n` stratified
/// samples, taking `z` as the eigenvector of the smallest eigenvalue of the
/// symmetric part. Negativity is judged relative to the matrix scale.
pub fn sampled_psd_oracle(c: &CoefficientSet, n: usize, seed: u64) -> OracleOutcome {
    let (score, extreme) = sample_minimum(n, seed, |u1, u2| {
        let s = sym_part(&ha_at(c, u1, u2));
        let (l, z) = min_eig_sym(&s);
        (l / max_abs(&s).max(1.0), l, z)
    });
    OracleOutcome {
        holds: score >= -PSD_TOL,
        extreme,
        samples: n,
    }
}

/// Sampled infimum of `zᵀ HA z / (z1²/u1 + z2²/u2)`, minimized exactly over
/// `z` at each sample (a generalized eigenvalue problem).
pub fn sampled_coercivity_infimum(c: &CoefficientSet, n: usize, seed: u64) -> (f64, Witness) {
    sample_minimum(n, seed, |u1, u2| {
        let s = sym_part(&ha_at(c, u1, u2));
        let d = Mat2::new(u1.sqrt(), 0.0, 0.0, u2.sqrt());
        let (l, y) = min_eig_sym(&(d * s * d));
        let z = d * y;
        (l, l, z)
    })
}

/// Sampled infimum of `zᵀ HA z / |z|²`.
pub fn sampled_identity_coercivity(c: &CoefficientSet, n: usize, seed: u64) -> (f64, Witness) {
    sample_minimum(n, seed, |u1, u2| {
        let (l, z) = min_eig_sym(&sym_part(&ha_at(c, u1, u2)));
        (l, l, z)
    })
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

/// Weak competition `b11/b21 > b10/b20 > b12/b22`, with division by zero
/// read as `+∞`.
pub fn check_weak_competition(lv: &LotkaVolterra) -> ConditionCheck {
    let b = &lv.b;
    let r_top = ratio(b[0][1], b[1][1]);
    let r_mid = ratio(b[0][0], b[1][0]);
    let r_low = ratio(b[0][2], b[1][2]);
    let holds = r_top > r_mid && r_mid > r_low;
    let mut out = ConditionCheck::default()
        .margin("upper", r_top - r_mid)
        .margin("lower", r_mid - r_low);
    out.holds = holds;
    out
}

/// `b10 = b12 < b11` and `b20 = b21 < b22`, with positive birth rates so
/// that the coexistence state exists.
pub fn check_bij(lv: &LotkaVolterra) -> ConditionCheck {
    let b = &lv.b;
    let mut out = ConditionCheck::default()
        .residual("b10_b12", (b[0][0] - b[0][2]).abs())
        .residual("b20_b21", (b[1][0] - b[1][1]).abs())
        .margin("b11_over_b10", b[0][1] - b[0][0])
        .margin("b22_over_b20", b[1][2] - b[1][0])
        .margin("b10", b[0][0])
        .margin("b20", b[1][0]);
    out.holds = out.equalities_hold() && out.margins.values().all(|m| *m > 0.0);
    out
}

fn competition_positive_definite(lv: &LotkaVolterra) -> bool {
    let s = sym_part(&lv.competition());
    s[(0, 0)] > 0.0 && s.determinant() > 0.0
}

fn large_time_preconditions(lv: &LotkaVolterra) -> Result<SteadyState> {
    if !check_bij(lv).holds {
        return Err(Error::Precondition(
            "source rates must satisfy b10 = b12 < b11 and b20 = b21 < b22".into(),
        ));
    }
    if !competition_positive_definite(lv) {
        return Err(Error::Precondition(
            "competition matrix is not positive definite".into(),
        ));
    }
    let steady = lv.steady_state()?;
    if !steady.is_interior() {
        return Err(Error::Precondition(format!(
            "steady state ({}, {}) is not inside the triangle",
            steady.u1, steady.u2
        )));
    }
    Ok(steady)
}

/// Conditions for convergence to the steady state `U`:
/// `(α11+β11)(α11+β11−β12) − 4γ21² U2/U1 > 0` and
/// `(α22+γ22)(α22+γ22−γ21) − 4β12² U1/U2 > 0`.
pub fn check_large_time(c: &CoefficientSet, lv: &LotkaVolterra) -> Result<ConditionCheck> {
    let steady = large_time_preconditions(lv)?;
    let p = c.free_parameters();
    let gamma21 = c.gamma[1][0];
    let d1 = p.alpha11 + p.beta11;
    let d2 = p.alpha22 + p.gamma22;
    let first = d1 * (d1 - p.beta12) - 4.0 * gamma21 * gamma21 * steady.u2 / steady.u1;
    let second = d2 * (d2 - gamma21) - 4.0 * p.beta12 * p.beta12 * steady.u1 / steady.u2;
    let mut out = ConditionCheck::default()
        .margin("first", first)
        .margin("second", second);
    out.holds = first > 0.0 && second > 0.0;
    Ok(out)
}

/// Sampled lower bound for `zᵀ K A(u) z ≥ c Σ z_i²/(u_i+ε)²` with
/// `K = diag((U_i+ε)/(u_i+ε)²)`, the Hessian of the regularized relative
/// entropy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KaOracle {
    pub eps: f64,
    /// Largest constant consistent with every sample (`≤ 0` on failure).
    pub constant: f64,
    pub extreme: Witness,
}

impl KaOracle {
    pub fn holds(&self) -> bool {
        self.constant > 0.0
    }

    pub fn witness(&self) -> Option<Witness> {
        (!self.holds()).then_some(self.extreme)
    }
}

fn ka_sample(
    c: &CoefficientSet,
    steady: &SteadyState,
    eps: f64,
    u1: f64,
    u2: f64,
) -> (f64, f64, Vec2) {
    let k = Mat2::new(
        (steady.u1 + eps) / (u1 + eps).powi(2),
        0.0,
        0.0,
        (steady.u2 + eps) / (u2 + eps).powi(2),
    );
    let s = sym_part(&(k * c.diffusion_matrix_at(u1, u2)));
    let d = Mat2::new(u1 + eps, 0.0, 0.0, u2 + eps);
    let (l, y) = min_eig_sym(&(d * s * d));
    (l, l, d * y)
}

/// Unchecked core of [`lemma_ka_oracle`].
pub fn ka_constant(
    c: &CoefficientSet,
    steady: &SteadyState,
    eps: f64,
    n: usize,
    seed: u64,
) -> KaOracle {
    let (constant, extreme) = sample_minimum(n, seed, |u1, u2| ka_sample(c, steady, eps, u1, u2));
    KaOracle {
        eps,
        constant,
        extreme,
    }
}

/// Lower bound of the regularized relative-entropy quadratic form over `n`
/// stratified samples. Requires the convergence conditions to hold.
pub fn lemma_ka_oracle(
    c: &CoefficientSet,
    lv: &LotkaVolterra,
    eps: f64,
    n: usize,
    seed: u64,
) -> Result<KaOracle> {
    if !check_large_time(c, lv)?.holds {
        return Err(Error::Precondition(
            "convergence conditions do not hold".into(),
        ));
    }
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!(
            "regularization {eps} must be positive"
        )));
    }
    let steady = lv.steady_state()?;
    Ok(ka_constant(c, &steady, eps, n, seed))
}

/// Largest `ε₀ ∈ (0, 0.1]` with a positive sampled constant, by bisection.
pub fn probe_ka_eps0(c: &CoefficientSet, lv: &LotkaVolterra, n: usize, seed: u64) -> Result<f64> {
    let upper = 0.1;
    if lemma_ka_oracle(c, lv, upper, n, seed)?.holds() {
        return Ok(upper);
    }
    let mut lo = 1e-8;
    if !lemma_ka_oracle(c, lv, lo, n, seed)?.holds() {
        return Ok(0.0);
    }
    let mut hi = upper;
    for _ in 0..40 {
        let mid = (lo * hi).sqrt();
        if lemma_ka_oracle(c, lv, mid, n, seed)?.holds() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-3 {
            break;
        }
    }
    Ok(lo)
}

/// Uniqueness conditions `α22 = α11`, `γ21 = β12`, `γ22 = β11` on top of the
/// existence conditions.
pub fn check_uniqueness(c: &CoefficientSet) -> ConditionCheck {
    let ex = check_existence(c);
    let mut out = ConditionCheck {
        margins: ex.margins.clone(),
        residuals: ex.residuals.clone(),
        holds: false,
    }
    .residual("alpha22_eq_alpha11", (c.alpha[1][1] - c.alpha[0][0]).abs())
    .residual("gamma21_eq_beta12", (c.gamma[1][0] - c.beta[0][1]).abs())
    .residual("gamma22_eq_beta11", (c.gamma[1][1] - c.beta[0][0]).abs());
    out.holds = ex.holds && out.equalities_hold();
    out
}

/// Conditions for bounded solutions of the SKT model with Lotka–Volterra
/// sources: `a10 > 0`, `a20 > 0`, `a21 = a11`, `a22 = a12`,
/// `a20 − a10 = a11 − a22 ≥ 0`, `b10 ≤ min{b11, b12}`, `b20 ≤ min{b21, b22}`.
pub fn check_skt(s: &SktCoefficients, lv: &LotkaVolterra) -> ConditionCheck {
    let b = &lv.b;
    let mut out = ConditionCheck::default()
        .residual("a21_eq_a11", (s.a21 - s.a11).abs())
        .residual("a22_eq_a12", (s.a22 - s.a12).abs())
        .residual(
            "a20_minus_a10_eq_a11_minus_a22",
            ((s.a20 - s.a10) - (s.a11 - s.a22)).abs(),
        )
        .margin("a10", s.a10)
        .margin("a20", s.a20)
        .margin("a11_minus_a22", s.a11 - s.a22)
        .margin("b1_edge", b[0][1].min(b[0][2]) - b[0][0])
        .margin("b2_edge", b[1][1].min(b[1][2]) - b[1][0]);
    let m = &out.margins;
    out.holds = out.equalities_hold()
        && m["a10"] > 0.0
        && m["a20"] > 0.0
        && m["a11_minus_a22"] >= 0.0
        && m["b1_edge"] >= 0.0
        && m["b2_edge"] >= 0.0;
    out
}

/// Outcome of the necessary-condition analysis based on the decompositions
/// `A = Σ u_k A^(k)` and `H = Σ φ_k″ H^(k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NecessaryConditions {
    pub holds: bool,
    /// `(i, j)` pairs (1-based) where `H^(i) A^(j)` fails to be semidefinite.
    pub failing_products: Vec<(usize, usize)>,
    /// `α12 = α21 = β21 = γ12 = 0`.
    pub zero_entries: bool,
    /// `β12 = α11 − α22 + β11 − β22` and `γ21 = α22 − α11 + γ22 − γ11`.
    pub linear_relations: bool,
}

pub fn necessary_conditions(c: &CoefficientSet) -> NecessaryConditions {
    let a = c.vertex_decomposition();
    let h = [
        Mat2::new(1.0, 0.0, 0.0, 0.0),
        Mat2::new(0.0, 0.0, 0.0, 1.0),
        Mat2::new(1.0, 1.0, 1.0, 1.0),
    ];
    let mut failing = Vec::new();
    for (i, hi) in h.iter().enumerate() {
        for (j, aj) in a.iter().enumerate() {
            let p = hi * aj / max_abs(aj).max(f64::MIN_POSITIVE);
            if i != j && !is_psd(&p, PSD_TOL) {
                failing.push((i + 1, j + 1));
            }
        }
    }
    let (al, be, ga) = (&c.alpha, &c.beta, &c.gamma);
    let zero_entries = [al[0][1], al[1][0], be[1][0], ga[0][1]]
        .iter()
        .all(|v| v.abs() <= EQ_TOL);
    let linear_relations = (be[0][1] - (al[0][0] - al[1][1] + be[0][0] - be[1][1])).abs() <= EQ_TOL
        && (ga[1][0] - (al[1][1] - al[0][0] + ga[1][1] - ga[0][0])).abs() <= EQ_TOL;
    NecessaryConditions {
        holds: failing.is_empty(),
        failing_products: failing,
        zero_entries,
        linear_relations,
    }
}

/// The degenerate case `α11 = α22 = 0` with `β11, γ22 > 0`, where
/// `zᵀ HA z ≥ ε |z|²` with `ε = min{β11, γ22}` (exponents `m_i = 1`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegenerateCase {
    pub holds: bool,
    pub epsilon: f64,
    pub exponents: (f64, f64),
}

pub fn check_remark_degenerate(c: &CoefficientSet) -> Result<DegenerateCase> {
    let p = c.free_parameters();
    if p.alpha11.abs() > EQ_TOL || p.alpha22.abs() > EQ_TOL {
        return Err(Error::Precondition(
            "degenerate case needs alpha11 = alpha22 = 0".into(),
        ));
    }
    let sym = check_structural_symmetry(c);
    // the shifted set must still be semidefinite, which needs β12 ≤ min{β11, γ22}
    let holds =
        sym.holds && p.beta11 > 0.0 && p.gamma22 > 0.0 && p.beta12 <= p.beta11.min(p.gamma22);
    Ok(DegenerateCase {
        holds,
        epsilon: if holds { p.beta11.min(p.gamma22) } else { 0.0 },
        exponents: (1.0, 1.0),
    })
}

/// Everything the `check` command reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub verdicts: BTreeMap<String, bool>,
    pub margins: BTreeMap<String, f64>,
    pub residuals: BTreeMap<String, f64>,
    pub coercivity_epsilon: f64,
    pub coercivity_exponents: (f64, f64),
    pub alpha_star: f64,
    pub det_hessian_det_a: Option<f64>,
    pub steady_state: Option<[f64; 2]>,
    pub source_edge_margins: Option<[f64; 2]>,
    pub necessary_failing_products: Vec<(usize, usize)>,
    pub psd_oracle: Option<OracleOutcome>,
    pub witnesses: Vec<Witness>,
    pub notes: Vec<String>,
}

impl AdmissibilityReport {
    pub fn verdict(&self, name: &str) -> bool {
        self.verdicts.get(name).copied().unwrap_or(false)
    }
}

/// Options for the sampled parts of the report.
#[derive(Clone, Copy, Debug)]
pub struct ReportOptions {
    pub oracle_samples: usize,
    pub seed: u64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            oracle_samples: 10_000,
            seed: 0,
        }
    }
}

pub fn admissibility_report(
    c: &CoefficientSet,
    lv: Option<&LotkaVolterra>,
    skt: Option<&SktCoefficients>,
    opts: ReportOptions,
) -> AdmissibilityReport {
    let mut verdicts = BTreeMap::new();
    let mut margins = BTreeMap::new();
    let mut residuals = BTreeMap::new();
    let mut notes = Vec::new();
    let mut witnesses = Vec::new();

    let mut record =
        |prefix: &str, check: &ConditionCheck, verdicts: &mut BTreeMap<String, bool>| {
            verdicts.insert(prefix.to_string(), check.holds);
            for (k, v) in &check.margins {
                margins.insert(format!("{prefix}.{k}"), *v);
            }
            for (k, v) in &check.residuals {
                residuals.insert(format!("{prefix}.{k}"), *v);
            }
        };

    let sym = check_structural_symmetry(c);
    record("structural_symmetry", &sym, &mut verdicts);
    let ex = check_existence(c);
    record("existence", &ex, &mut verdicts);
    let mut eps = 0.0;
    let mut exponents = (0.5, 0.5);
    match check_psd_characterization(c) {
        Ok(psd) => {
            record("psd_characterization", &psd, &mut verdicts);
            if psd.holds {
                eps = coercivity_epsilon(c).unwrap_or(0.0);
            }
        }
        Err(e) => {
            verdicts.insert("psd_characterization".into(), false);
            notes.push(format!("psd_characterization not applicable: {e}"));
        }
    }
    let det_c = det_hessian_det_a(c).ok();

    match lv {
        Some(lv) => {
            record(
                "weak_competition",
                &check_weak_competition(lv),
                &mut verdicts,
            );
            record("bij_special", &check_bij(lv), &mut verdicts);
            match check_large_time(c, lv) {
                Ok(lt) => record("large_time_abc", &lt, &mut verdicts),
                Err(e) => {
                    verdicts.insert("large_time_abc".into(), false);
                    notes.push(format!("large_time_abc not applicable: {e}"));
                }
            }
        }
        None => {
            for name in ["weak_competition", "bij_special", "large_time_abc"] {
                verdicts.insert(name.into(), false);
                notes.push(format!("{name} not applicable: no source terms given"));
            }
        }
    }
    let uq = check_uniqueness(c);
    record("uniqueness_condu", &uq, &mut verdicts);
    match skt {
        Some(s) => {
            let chk = check_skt(s, &lv.copied().unwrap_or_default());
            record("skt_corollary", &chk, &mut verdicts);
        }
        None => {
            verdicts.insert("skt_corollary".into(), false);
            notes.push("skt_corollary not applicable: coefficients not given in SKT form".into());
        }
    }
    let nec = necessary_conditions(c);
    verdicts.insert("necessary_appendix".into(), nec.holds);
    match check_remark_degenerate(c) {
        Ok(d) => {
            verdicts.insert("degenerate_remark".into(), d.holds);
            if d.holds {
                eps = d.epsilon;
                exponents = d.exponents;
            }
        }
        Err(e) => {
            verdicts.insert("degenerate_remark".into(), false);
            notes.push(format!("degenerate_remark not applicable: {e}"));
        }
    }

    let psd_oracle = (opts.oracle_samples > 0).then(|| {
        let o = sampled_psd_oracle(c, opts.oracle_samples, opts.seed);
        if let Some(w) = o.witness() {
            witnesses.push(w);
        }
        o
    });

    let steady = lv
        .and_then(|lv| lv.steady_state().ok())
        .map(|u| [u.u1, u.u2]);
    let edge = lv.filter(|lv| !lv.is_zero()).map(|lv| lv.edge_margins());

    AdmissibilityReport {
        verdicts,
        margins,
        residuals,
        coercivity_epsilon: eps,
        coercivity_exponents: exponents,
        alpha_star: eps,
        det_hessian_det_a: det_c,
        steady_state: steady,
        source_edge_margins: edge,
        necessary_failing_products: nec.failing_products,
        psd_oracle,
        witnesses,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::quad_form;
    use crate::model::FreeParameters;

    pub(crate) fn admissible() -> CoefficientSet {
        CoefficientSet::from_free(FreeParameters {
            alpha11: 1.0,
            alpha22: 1.0,
            beta11: 1.0,
            beta12: 0.5,
            gamma22: 1.0,
        })
    }

    fn bij() -> LotkaVolterra {
        LotkaVolterra::new([[0.25, 0.5, 0.25], [0.25, 0.25, 0.5]]).unwrap()
    }

    #[test]
    fn admissible_preset_closure_values() {
        let c = admissible();
        assert_eq!(c.gamma[1][0], 0.5);
        assert_eq!(c.beta[1][1], 0.5);
        assert_eq!(c.gamma[0][0], 0.5);
    }

    #[test]
    fn symmetry_examples() {
        let zero = check_structural_symmetry(&CoefficientSet::zero());
        assert!(zero.holds);
        assert!(zero.residuals.values().all(|r| *r == 0.0));
        let ks = check_structural_symmetry(&CoefficientSet::keller_segel());
        assert!(!ks.holds);
        assert_eq!(ks.residuals["gamma11"], 1.0);
    }

    #[test]
    fn skt_corollary_family_is_symmetric() {
        for (a10, a11, a12) in [(1.0, 1.0, 0.5), (0.3, 2.0, 0.1), (2.0, 0.5, 0.5)] {
            // a21 = a11, a22 = a12, a20 = a10 + a11 − a22
            let s = SktCoefficients::new(a10, a10 + a11 - a12, a11, a12, a11, a12).unwrap();
            assert!(check_structural_symmetry(&s.to_general()).holds);
        }
    }

    #[test]
    fn existence_examples() {
        let c = admissible();
        let ex = check_existence(&c);
        assert!(ex.holds);
        let m = &ex.margins;
        assert_eq!(
            [
                m["alpha11"],
                m["alpha22"],
                m["cross"],
                m["diag1"],
                m["diag2"]
            ],
            [1.0, 1.0, 1.5, 2.0, 2.0]
        );
        let mut p = c.free_parameters();
        p.alpha11 = 0.0;
        assert!(!check_existence(&CoefficientSet::from_free(p)).holds);
        assert!(!check_existence(&CoefficientSet::keller_segel()).holds);
    }

    #[test]
    fn psd_characterization_examples() {
        assert!(check_psd_characterization(&admissible()).unwrap().holds);
        assert!(matches!(
            check_psd_characterization(&CoefficientSet::keller_segel()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn degenerate_branch_is_rank_one() {
        let c = CoefficientSet::from_free(FreeParameters {
            alpha11: 0.0,
            alpha22: 1.0,
            beta11: 0.0,
            beta12: -1.0,
            gamma22: -1.0,
        });
        assert!(check_psd_characterization(&c).unwrap().holds);
        for (u1, u2) in [(0.2, 0.3), (0.05, 0.9), (0.6, 0.1)] {
            let ha = ha_at(&c, u1, u2);
            let expect = Mat2::new(0.0, 0.0, 0.0, 1.0 / u2);
            assert!((ha - expect).abs().max() < 1e-12, "{ha}");
        }
    }

    #[test]
    fn oracle_agrees_with_characterization() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for k in 0..500 {
            let p = FreeParameters {
                alpha11: rng.random_range(-1.0..2.0),
                alpha22: rng.random_range(-1.0..2.0),
                beta11: rng.random_range(-2.0..2.0),
                beta12: rng.random_range(-2.0..3.0),
                gamma22: rng.random_range(-2.0..2.0),
            };
            let c = CoefficientSet::from_free(p);
            let exact = check_psd_characterization(&c).unwrap();
            // skip sets whose binding margin is too thin to resolve by sampling
            let min_margin = exact
                .margins
                .values()
                .fold(f64::INFINITY, |a, b| a.min(b.abs()));
            if min_margin < 0.05 {
                continue;
            }
            let oracle = sampled_psd_oracle(&c, 3000, k);
            assert_eq!(oracle.holds, exact.holds, "{p:?}");
        }
    }

    #[test]
    fn coercivity_examples() {
        assert_eq!(coercivity_epsilon(&admissible()).unwrap(), 1.0);
        let mut p = admissible().free_parameters();
        p.alpha11 = 0.0;
        p.beta12 = 0.0;
        assert_eq!(
            coercivity_epsilon(&CoefficientSet::from_free(p)).unwrap(),
            0.0
        );
    }

    #[test]
    fn coercivity_bound_on_samples() {
        use rand::Rng;
        let c = admissible();
        let eps = coercivity_epsilon(&c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for i in 0..10_000 {
            let (u1, u2) = stratified_point(&mut rng, i);
            let z = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let q = quad_form(&ha_at(&c, u1, u2), &z);
            assert!(q >= 0.999 * eps * (z[0] * z[0] / u1 + z[1] * z[1] / u2));
        }
    }

    #[test]
    fn coercivity_monotone_in_parameters() {
        let base = admissible().free_parameters();
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let mut p = base;
            p.beta12 = -1.0 + 0.1 * k as f64;
            let e = coercivity_epsilon(&CoefficientSet::from_free(p)).unwrap();
            assert!(e <= prev);
            prev = e;
        }
        let mut prev = -1.0;
        for k in 0..20 {
            let mut p = base;
            p.alpha11 = 0.6 + 0.1 * k as f64;
            let e = coercivity_epsilon(&CoefficientSet::from_free(p)).unwrap();
            assert!(e >= prev);
            prev = e;
        }
    }

    #[test]
    fn vertex_limit_examples() {
        let v = vertex_limits(&admissible()).unwrap();
        assert_eq!(v.f1, Mat2::new(1.0, 0.0, 0.0, 1.0));
        assert_eq!(v.f2, Mat2::new(2.0, 2.0, 2.0, 3.5));
        assert_eq!(v.det_f2, 3.0);
        assert_eq!(v.f3, Mat2::new(3.5, 2.0, 2.0, 2.0));
        assert_eq!(v.det_f3, 3.0);
        assert!((v.f2.determinant() - v.det_f2).abs() < 1e-12);
        assert!((v.f3.determinant() - v.det_f3).abs() < 1e-12);
        let z = vertex_limits(&CoefficientSet::zero()).unwrap();
        assert_eq!(z.f1, Mat2::zeros());
        assert_eq!(z.f2, Mat2::zeros());
        assert_eq!(z.f3, Mat2::zeros());
    }

    #[test]
    fn vertex_limits_match_small_s_products() {
        let c = admissible();
        let v = vertex_limits(&c).unwrap();
        let s = 1e-6;
        assert!((ha_at(&c, s, s) * s - v.f1).abs().max() < 1e-4);
        assert!((ha_at(&c, 1.0 - 2.0 * s, s) * s - v.f2).abs().max() < 1e-4);
        assert!((ha_at(&c, s, 1.0 - 2.0 * s) * s - v.f3).abs().max() < 1e-4);
    }

    #[test]
    fn det_hessian_examples() {
        assert_eq!(det_hessian_det_a(&admissible()).unwrap(), 0.0);
        let mut p = admissible().free_parameters();
        p.alpha22 = 1.5;
        assert!((det_hessian_det_a(&CoefficientSet::from_free(p)).unwrap() + 0.25).abs() < 1e-15);
    }

    /// Second differences of `u ↦ det A(u)`, exact for a quadratic up to rounding.
    pub(crate) fn det_hessian_fd(c: &CoefficientSet, u1: f64, u2: f64) -> f64 {
        let f = |a: f64, b: f64| c.diffusion_matrix_at(a, b).determinant();
        let h = 1e-3;
        let f11 = (f(u1 + h, u2) - 2.0 * f(u1, u2) + f(u1 - h, u2)) / (h * h);
        let f22 = (f(u1, u2 + h) - 2.0 * f(u1, u2) + f(u1, u2 - h)) / (h * h);
        let f12 = (f(u1 + h, u2 + h) - f(u1 + h, u2 - h) - f(u1 - h, u2 + h) + f(u1 - h, u2 - h))
            / (4.0 * h * h);
        f11 * f22 - f12 * f12
    }

    #[test]
    fn det_hessian_matches_finite_differences() {
        let mut p = admissible().free_parameters();
        p.alpha22 = 1.5;
        p.gamma22 = 0.7;
        let c = CoefficientSet::from_free(p);
        let fd = det_hessian_fd(&c, 0.3, 0.2);
        assert!((fd - det_hessian_det_a(&c).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn sampled_oracle_examples() {
        assert!(sampled_psd_oracle(&admissible(), 10_000, 1).holds);
        let mut p = admissible().free_parameters();
        p.beta12 = p.alpha11 + p.beta11.min(p.gamma22) + 0.1;
        let bad = sampled_psd_oracle(&CoefficientSet::from_free(p), 100_000, 1);
        let w = bad.witness().expect("witness");
        let near_vertex = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
            .iter()
            .any(|(a, b)| (w.u[0] - a).hypot(w.u[1] - b) < 2e-3);
        assert!(near_vertex, "{w:?}");
        let ks = sampled_psd_oracle(&CoefficientSet::keller_segel(), 10_000, 1);
        assert!(!ks.holds);
        let z = Vec2::new(w.z[0], w.z[1]);
        assert!(quad_form(&ha_at(&CoefficientSet::from_free(p), w.u[0], w.u[1]), &z) < 0.0);
    }

    #[test]
    fn oracle_is_deterministic() {
        let a = sampled_psd_oracle(&CoefficientSet::keller_segel(), 20_000, 7);
        let b = sampled_psd_oracle(&CoefficientSet::keller_segel(), 20_000, 7);
        assert_eq!(a, b);
    }

    #[test]
    fn competition_examples() {
        let lv = bij();
        assert!(check_weak_competition(&lv).holds);
        assert!(check_bij(&lv).holds);
        let tight = LotkaVolterra::new([[0.5, 0.5, 0.5], [0.25, 0.25, 0.5]]).unwrap();
        assert!(!check_bij(&tight).holds);
    }

    #[test]
    fn bij_implies_weak_competition_and_interior_state() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let b10: f64 = rng.random_range(0.01..1.0);
            let b20: f64 = rng.random_range(0.01..1.0);
            let lv = LotkaVolterra::new([
                [b10, b10 + rng.random_range(0.01..1.0), b10],
                [b20, b20, b20 + rng.random_range(0.01..1.0)],
            ])
            .unwrap();
            assert!(check_bij(&lv).holds);
            assert!(check_weak_competition(&lv).holds);
            let u = lv.steady_state().unwrap();
            assert!(u.is_interior() && u.u3() > 0.0, "{u:?}");
        }
    }

    #[test]
    fn large_time_examples() {
        let lt = check_large_time(&admissible(), &bij()).unwrap();
        assert!(lt.holds);
        assert!((lt.margins["first"] - 2.0).abs() < 1e-12);
        assert!((lt.margins["second"] - 2.0).abs() < 1e-12);
        // γ21 = 2 forces β12 = γ21 + α11 − α22 = 2
        let mut p = admissible().free_parameters();
        p.beta12 = 2.0;
        let c = CoefficientSet::from_free(p);
        assert_eq!(c.gamma[1][0], 2.0);
        assert!(!check_large_time(&c, &bij()).unwrap().holds);
        let not_bij = LotkaVolterra::new([[0.3, 0.5, 0.25], [0.25, 0.25, 0.5]]).unwrap();
        assert!(matches!(
            check_large_time(&admissible(), &not_bij),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn ka_oracle_positive_and_stabilizing() {
        let c = admissible();
        let lv = bij();
        let consts: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|e| lemma_ka_oracle(&c, &lv, *e, 10_000, 3).unwrap().constant)
            .collect();
        assert!(consts.iter().all(|k| *k > 0.0), "{consts:?}");
        assert!((consts[1] - consts[2]).abs() <= 0.2 * consts[2]);
    }

    #[test]
    fn ka_oracle_finds_witness_when_conditions_fail() {
        let mut p = admissible().free_parameters();
        p.beta12 = 2.0;
        let c = CoefficientSet::from_free(p);
        let steady = bij().steady_state().unwrap();
        let out = ka_constant(&c, &steady, 1e-3, 10_000, 3);
        assert!(out.witness().is_some(), "{out:?}");
        assert!(lemma_ka_oracle(&c, &bij(), 1e-3, 100, 0).is_err());
    }

    #[test]
    fn ka_eps0_probe_is_positive() {
        let e0 = probe_ka_eps0(&admissible(), &bij(), 3000, 5).unwrap();
        assert!(e0 > 0.0 && e0 <= 0.1);
    }

    #[test]
    fn uniqueness_examples() {
        assert!(check_uniqueness(&admissible()).holds);
        let skt = SktCoefficients::new(1.0, 1.5, 1.0, 0.5, 1.0, 0.5)
            .unwrap()
            .to_general();
        let u = check_uniqueness(&skt);
        assert!(!u.holds);
        assert!(u
            .violated_equalities()
            .contains(&"alpha22_eq_alpha11".to_string()));
        assert!(!check_uniqueness(&CoefficientSet::zero()).holds);
    }

    #[test]
    fn skt_examples() {
        let s = SktCoefficients::new(1.0, 1.5, 1.0, 0.5, 1.0, 0.5).unwrap();
        assert!(check_skt(&s, &bij()).holds);
        let tri = SktCoefficients::new(1.0, 1.5, 1.0, 0.5, 0.0, 0.5).unwrap();
        assert!(!check_skt(&tri, &bij()).holds);
    }

    #[test]
    fn skt_corollary_implies_existence() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let a10 = rng.random_range(0.01..2.0);
            let a12 = rng.random_range(0.0..2.0);
            let a11 = a12 + rng.random_range(0.0..2.0);
            let s = SktCoefficients::new(a10, a10 + a11 - a12, a11, a12, a11, a12).unwrap();
            let chk = check_skt(&s, &bij());
            assert!(chk.holds);
            assert!(check_existence(&s.to_general()).holds);
        }
    }

    #[test]
    fn necessary_examples() {
        let nec = necessary_conditions(&admissible());
        assert!(nec.holds && nec.zero_entries && nec.linear_relations);
        let ks = necessary_conditions(&CoefficientSet::keller_segel());
        assert!(!ks.holds);
        assert!(ks.zero_entries);
        assert!(!ks.linear_relations);
        assert_eq!(ks.failing_products, vec![(3, 1)]);
        assert!(necessary_conditions(&CoefficientSet::zero()).holds);
    }

    mod props {
        use super::*;
        use crate::model::FreeParameters;
        use proptest::prelude::*;

        fn admissible_free() -> impl Strategy<Value = FreeParameters> {
            (0.01f64..3.0, 0.01f64..3.0, -3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0)
                .prop_map(|(a1, a2, b11, s, g22)| FreeParameters {
                    alpha11: a1,
                    alpha22: a2,
                    beta11: b11.max(-a1),
                    beta12: s,
                    gamma22: g22.max(-a2),
                })
                .prop_filter("cross inequality", |p| {
                    p.alpha11 + p.beta11.min(p.gamma22) - p.beta12 > 0.0
                })
        }

        proptest! {
            #[test]
            fn existence_implies_necessary_conditions(p in admissible_free()) {
                let c = CoefficientSet::from_free(p);
                prop_assert!(check_existence(&c).holds);
                let nec = necessary_conditions(&c);
                prop_assert!(nec.holds, "{:?}", nec.failing_products);
                prop_assert!(nec.zero_entries && nec.linear_relations);
            }

            #[test]
            fn det_hessian_is_nonpositive(p in admissible_free()) {
                prop_assert!(det_hessian_det_a(&CoefficientSet::from_free(p)).unwrap() <= 0.0);
            }
        }
    }

    #[test]
    fn degenerate_examples() {
        let c = CoefficientSet::from_free(FreeParameters {
            alpha11: 0.0,
            alpha22: 0.0,
            beta11: 1.0,
            beta12: 0.25,
            gamma22: 1.0,
        });
        assert_eq!(c.gamma[1][0], 0.25);
        assert_eq!(c.beta[1][1], 0.75);
        assert_eq!(c.gamma[0][0], 0.75);
        let d = check_remark_degenerate(&c).unwrap();
        assert!(d.holds);
        assert_eq!(d.epsilon, 1.0);
        let (inf, _) = sampled_identity_coercivity(&c, 10_000, 2);
        assert!(inf >= 0.5);
        assert!(inf >= 0.999 * d.epsilon, "{inf}");
        let mut p = c.free_parameters();
        p.beta11 = 0.0;
        assert!(
            !check_remark_degenerate(&CoefficientSet::from_free(p))
                .unwrap()
                .holds
        );
        assert!(check_remark_degenerate(&admissible()).is_err());
    }

    #[test]
    fn report_for_admissible_preset() {
        let r = admissibility_report(&admissible(), Some(&bij()), None, ReportOptions::default());
        assert!(r.verdict("existence"));
        assert!(r.verdict("psd_characterization"));
        assert!(r.verdict("large_time_abc"));
        assert!(r.verdict("uniqueness_condu"));
        assert!(r.verdict("necessary_appendix"));
        assert_eq!(r.coercivity_epsilon, 1.0);
        assert_eq!(r.alpha_star, 1.0);
        assert!(r.witnesses.is_empty());
        // margin signs agree with verdicts
        for (k, v) in &r.margins {
            let prefix = k.split('.').next().unwrap();
            if r.verdict(prefix) {
                assert!(*v >= 0.0, "{k}");
            }
        }
    }
}
