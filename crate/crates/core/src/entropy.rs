//! Entropy densities and functionals, the entropy-variable bijection between
//! the triangle and the plane, relative entropies, the Gajewski semimetric and
//! the Fisher information.
//!
//! All field functionals use the midpoint rule on uniform cells of width `dx`
//! and sum in a fixed order with compensation, so they are reproducible bit for
//! bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{compensated_sum, Mat2, Vec2};
use crate::model::{
    entropy_hessian_inverse_at, CoefficientSet, LotkaVolterra, SimplexState, SteadyState,
};

/// Minimum component of a reference density.
pub const REFERENCE_MARGIN: f64 = 1e-9;

/// Reference density `ū` of the relative entropy `h(u|ū)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDensity {
    ubar1: f64,
    ubar2: f64,
}

impl ReferenceDensity {
    pub fn new(ubar1: f64, ubar2: f64) -> Result<Self> {
        let min = ubar1.min(ubar2).min(1.0 - ubar1 - ubar2);
        if !(min >= REFERENCE_MARGIN) {
            return Err(Error::NotInterior {
                u1: ubar1,
                u2: ubar2,
                min,
                margin: REFERENCE_MARGIN,
            });
        }
        Ok(Self { ubar1, ubar2 })
    }

    pub fn barycenter() -> Self {
        Self {
            ubar1: 1.0 / 3.0,
            ubar2: 1.0 / 3.0,
        }
    }

    pub fn from_steady_state(u: &SteadyState) -> Result<Self> {
        Self::new(u.u1, u.u2)
    }

    pub fn components(&self) -> [f64; 3] {
        [self.ubar1, self.ubar2, 1.0 - self.ubar1 - self.ubar2]
    }
}

/// Entropy variables `w = h′(u|ū)`; unconstrained in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyPoint {
    pub w1: f64,
    pub w2: f64,
}

/// `φ(r) = r log r − r + 1` with `φ(0) = 1`.
#[inline]
fn phi(r: f64) -> f64 {
    if r == 0.0 {
        1.0
    } else {
        r * r.ln() - r + 1.0
    }
}

/// `h(u|ū) = Σ_{i=1..3} ū_i φ(u_i/ū_i)`, with `0 log 0 = 0` on the boundary.
pub fn entropy_density(u: &SimplexState, ubar: &ReferenceDensity) -> f64 {
    entropy_density_at(u.u1(), u.u2(), ubar)
}

#[inline]
pub(crate) fn entropy_density_at(u1: f64, u2: f64, ubar: &ReferenceDensity) -> f64 {
    let b = ubar.components();
    let u = [u1, u2, 1.0 - u1 - u2];
    (0..3).map(|i| b[i] * phi(u[i].max(0.0) / b[i])).sum()
}

/// Relative gradient `∂h(u|ū)/∂u_i = log(u_i/ū_i) − log(u3/ū3)`.
pub fn entropy_gradient(u: &SimplexState, ubar: &ReferenceDensity) -> Result<Vec2> {
    require_positive(u)?;
    let b = ubar.components();
    let l3 = (u.u3() / b[2]).ln();
    Ok(Vec2::new(
        (u.u1() / b[0]).ln() - l3,
        (u.u2() / b[1]).ln() - l3,
    ))
}

/// Gradient of the absolute entropy `h(u) = Σ u_i (log u_i − 1)`:
/// `log u_i − log u3`. Differs from [`entropy_gradient`] by the constant
/// `log(ū_3/ū_i)`.
pub fn entropy_gradient_absolute(u: &SimplexState) -> Result<Vec2> {
    require_positive(u)?;
    let l3 = u.u3().ln();
    Ok(Vec2::new(u.u1().ln() - l3, u.u2().ln() - l3))
}

/// The logarithms only need positive components, so states far closer to
/// the boundary than [`crate::model::INTERIOR_MARGIN`] are still accepted.
fn require_positive(u: &SimplexState) -> Result<()> {
    let m = u.min_component();
    if u.u1().is_finite() && u.u2().is_finite() && m > 0.0 {
        Ok(())
    } else {
        Err(Error::NotInterior {
            u1: u.u1(),
            u2: u.u2(),
            min: m,
            margin: 0.0,
        })
    }
}

pub fn to_entropy_vars(u: &SimplexState, ubar: &ReferenceDensity) -> Result<EntropyPoint> {
    let w = entropy_gradient(u, ubar)?;
    Ok(EntropyPoint { w1: w[0], w2: w[1] })
}

/// Inverse of [`to_entropy_vars`]: `u_i = ū_i e^{w_i} / (ū_3 + ū_1 e^{w_1} + ū_2 e^{w_2})`.
///
/// Exponents are shifted by `max(0, w1, w2)` so no term overflows.
pub fn from_entropy_vars(w: &EntropyPoint, ubar: &ReferenceDensity) -> SimplexState {
    let (u1, u2) = from_entropy_vars_at(w.w1, w.w2, ubar);
    SimplexState::new_unchecked(u1, u2)
}

#[inline]
pub(crate) fn from_entropy_vars_at(w1: f64, w2: f64, ubar: &ReferenceDensity) -> (f64, f64) {
    let b = ubar.components();
    let shift = w1.max(w2).max(0.0);
    let e1 = b[0] * (w1 - shift).exp();
    let e2 = b[1] * (w2 - shift).exp();
    let e3 = b[2] * (-shift).exp();
    let den = e1 + e2 + e3;
    (e1 / den, e2 / den)
}

/// Mobility `B = A(u) h″(u)⁻¹`, the diffusion matrix in entropy variables.
pub fn mobility_matrix(c: &CoefficientSet, u: &SimplexState) -> Result<Mat2> {
    u.require_interior()?;
    Ok(mobility_at(c, u.u1(), u.u2()))
}

#[inline]
pub(crate) fn mobility_at(c: &CoefficientSet, u1: f64, u2: f64) -> Mat2 {
    c.diffusion_matrix_at(u1, u2) * entropy_hessian_inverse_at(u1, u2)
}

/// `∂B/∂u1` and `∂B/∂u2`.
pub(crate) fn mobility_derivatives_at(c: &CoefficientSet, u1: f64, u2: f64) -> [Mat2; 2] {
    let a = c.diffusion_matrix_at(u1, u2);
    let m = entropy_hessian_inverse_at(u1, u2);
    let dm1 = Mat2::new(1.0 - 2.0 * u1, -u2, -u2, 0.0);
    let dm2 = Mat2::new(0.0, -u1, -u1, 1.0 - 2.0 * u2);
    [
        c.beta_matrix() * m + a * dm1,
        c.gamma_matrix() * m + a * dm2,
    ]
}

/// A cell field of states on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateField {
    cells: Vec<SimplexState>,
    dx: f64,
}

impl StateField {
    /// Builds a field whose cells all lie in the closed triangle.
    pub fn new(cells: Vec<SimplexState>, dx: f64) -> Result<Self> {
        if cells.is_empty() || !(dx > 0.0) {
            return Err(Error::InvalidField("empty field or nonpositive dx".into()));
        }
        if let Some(i) = cells.iter().position(|c| !c.in_closure()) {
            return Err(Error::InvalidField(format!(
                "cell {i} outside the triangle"
            )));
        }
        Ok(Self { cells, dx })
    }

    pub fn from_components(u1: &[f64], u2: &[f64], dx: f64) -> Result<Self> {
        if u1.len() != u2.len() {
            return Err(Error::InvalidField("component lengths differ".into()));
        }
        let cells = u1
            .iter()
            .zip(u2)
            .map(|(a, b)| SimplexState::new_unchecked(*a, *b))
            .collect();
        Self::new(cells, dx)
    }

    pub fn constant(u: SimplexState, n: usize, dx: f64) -> Result<Self> {
        Self::new(vec![u; n], dx)
    }

    pub(crate) fn from_cells_unchecked(cells: Vec<SimplexState>, dx: f64) -> Self {
        Self { cells, dx }
    }

    pub fn cells(&self) -> &[SimplexState] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn u1(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.u1()).collect()
    }

    pub fn u2(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.u2()).collect()
    }

    /// `(∫u1, ∫u2)`.
    pub fn masses(&self) -> [f64; 2] {
        [
            compensated_sum(self.cells.iter().map(|c| c.u1() * self.dx)),
            compensated_sum(self.cells.iter().map(|c| c.u2() * self.dx)),
        ]
    }

    /// Smallest of `u1`, `u2`, `u3` over all cells.
    pub fn min_component(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.min_component())
            .fold(f64::INFINITY, f64::min)
    }
}

/// `H[u|ū] = ∫ h(u|ū) dx`.
pub fn entropy_functional(field: &StateField, ubar: &ReferenceDensity) -> f64 {
    let dx = field.dx();
    compensated_sum(field.cells().iter().map(|c| dx * entropy_density(c, ubar)))
}

/// `Φ(u|U) = Σ_i ∫ U_i (u_i/U_i − 1 − log(u_i/U_i)) dx`; `+∞` when some
/// cell has a vanishing component.
pub fn relative_phi(field: &StateField, steady: &SteadyState) -> f64 {
    let dx = field.dx();
    let big_u = [steady.u1, steady.u2];
    if field.cells().iter().any(|c| c.u1() <= 0.0 || c.u2() <= 0.0) {
        return f64::INFINITY;
    }
    compensated_sum(field.cells().iter().flat_map(|c| {
        let u = [c.u1(), c.u2()];
        (0..2).map(move |i| {
            let r = u[i] / big_u[i];
            dx * big_u[i] * (r - 1.0 - r.ln())
        })
    }))
}

/// `Φ_ε(u|U) = Σ_i ∫ (u_i − U_i − (U_i+ε) log((u_i+ε)/(U_i+ε))) dx`.
pub fn phi_eps(field: &StateField, steady: &SteadyState, eps: f64) -> f64 {
    let dx = field.dx();
    let big_u = [steady.u1, steady.u2];
    compensated_sum(field.cells().iter().flat_map(|c| {
        let u = [c.u1(), c.u2()];
        (0..2).map(move |i| {
            dx * (u[i] - big_u[i] - (big_u[i] + eps) * ((u[i] + eps) / (big_u[i] + eps)).ln())
        })
    }))
}

/// Reaction contribution to the entropy balance, in the sign-revealing form
/// `−Σ_i b_i0 u_i U3 (u_i/U_i − u3/U3)(log(u_i/U_i) − log(u3/U3)) ≤ 0`,
/// valid when `b10 = b12 < b11` and `b20 = b21 < b22`.
pub fn source_entropy_product(
    lv: &LotkaVolterra,
    u: &SimplexState,
    steady: &SteadyState,
) -> Result<f64> {
    if !crate::admissibility::check_bij(lv).holds {
        return Err(Error::Precondition(
            "source coefficients must satisfy b10 = b12 < b11, b20 = b21 < b22".into(),
        ));
    }
    u.require_interior()?;
    let big = [steady.u1, steady.u2, steady.u3()];
    let uu = u.components();
    let r3 = uu[2] / big[2];
    Ok(-(0..2)
        .map(|i| {
            let ri = uu[i] / big[i];
            lv.b[i][0] * uu[i] * big[2] * (ri - r3) * (ri.ln() - r3.ln())
        })
        .sum::<f64>())
}

/// Per-cell contribution `a log a + b log b − (a+b) log((a+b)/2)`, evaluated
/// as `m [(1+d) log(1+d) + (1−d) log(1−d)]` with `m = (a+b)/2`,
/// `d = (a−b)/(a+b)` so that nearly equal arguments keep full relative
/// accuracy.
fn jensen_term(a: f64, b: f64) -> f64 {
    let s = a + b;
    let m = 0.5 * s;
    let d = (a - b) / s;
    if d == 0.0 {
        return 0.0;
    }
    let g = if d.abs() < 0.1 {
        // Σ_{k≥1} d^{2k} / (k (2k−1))
        let d2 = d * d;
        let mut pow = d2;
        let mut acc = 0.0;
        for k in 1..=12 {
            let kf = k as f64;
            acc += pow / (kf * (2.0 * kf - 1.0));
            pow *= d2;
        }
        acc
    } else {
        (1.0 + d) * d.ln_1p() + (1.0 - d) * (-d).ln_1p()
    };
    m * g
}

/// Gajewski semimetric `Ξ[σ1,σ2] = S[σ1] + S[σ2] − 2 S[(σ1+σ2)/2]`,
/// `S[σ] = ∫ σ log σ dx`.
pub fn gajewski_semimetric(s1: &[f64], s2: &[f64], dx: f64) -> Result<f64> {
    if s1.len() != s2.len() {
        return Err(Error::InvalidField("fields have different lengths".into()));
    }
    if let Some(v) = s1.iter().chain(s2).find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidField(format!(
            "nonpositive value {v} in semimetric argument"
        )));
    }
    Ok(compensated_sum(
        s1.iter().zip(s2).map(|(a, b)| dx * jensen_term(*a, *b)),
    ))
}

/// Discrete Fisher information `∫ d |∇√σ|² dx` with two-point gradients on the
/// interior faces and the face weight taken as the mean of the adjacent cells.
/// Boundary faces carry zero flux and contribute nothing.
pub fn fisher_information(field: &[f64], weight: &[f64], dx: f64) -> Result<f64> {
    if field.len() != weight.len() {
        return Err(Error::InvalidField(
            "field and weight lengths differ".into(),
        ));
    }
    if field.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidField("negative field value".into()));
    }
    if weight.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidField("nonpositive weight".into()));
    }
    Ok(compensated_sum(
        field.windows(2).zip(weight.windows(2)).map(|(f, w)| {
            let g = (f[1].sqrt() - f[0].sqrt()) / dx;
            dx * 0.5 * (w[0] + w[1]) * g * g
        }),
    ))
}
