//! Coefficient data, diffusion-matrix and source evaluation, and the constant
//! steady state of the two-species system
//!
//! ```text
//! ∂t u − div(A(u) ∇u) = f(u),   A_ij(u) = α_ij + β_ij u1 + γ_ij u2,
//! ```
//!
//! posed for densities in the triangle `D = {u1 > 0, u2 > 0, u1 + u2 < 1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};

/// Tolerance for membership in the closed triangle.
pub const SIMPLEX_TOL: f64 = 1e-12;
/// Minimum component for strict interior membership.
pub const INTERIOR_MARGIN: f64 = 1e-12;

/// Pointwise densities `(u1, u2)`; `u3 = 1 − u1 − u2` is always derived.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexState {
    u1: f64,
    u2: f64,
}

impl SimplexState {
    /// State in the closed triangle (tolerance [`SIMPLEX_TOL`]).
    pub fn new(u1: f64, u2: f64) -> Result<Self> {
        let s = Self { u1, u2 };
        if !s.in_closure() {
            return Err(Error::OutsideSimplex { u1, u2 });
        }
        Ok(s)
    }

    /// State strictly inside the triangle (min component ≥ [`INTERIOR_MARGIN`]).
    pub fn interior(u1: f64, u2: f64) -> Result<Self> {
        let s = Self { u1, u2 };
        s.require_interior()?;
        Ok(s)
    }

    /// No membership check. Callers are responsible for the invariant.
    pub(crate) fn new_unchecked(u1: f64, u2: f64) -> Self {
        Self { u1, u2 }
    }

    pub fn u1(&self) -> f64 {
        self.u1
    }

    pub fn u2(&self) -> f64 {
        self.u2
    }

    pub fn u3(&self) -> f64 {
        1.0 - self.u1 - self.u2
    }

    pub fn as_vec(&self) -> Vec2 {
        Vec2::new(self.u1, self.u2)
    }

    pub fn components(&self) -> [f64; 3] {
        [self.u1, self.u2, self.u3()]
    }

    pub fn min_component(&self) -> f64 {
        self.u1.min(self.u2).min(self.u3())
    }

    pub fn in_closure(&self) -> bool {
        self.u1.is_finite()
            && self.u2.is_finite()
            && self.u1 >= -SIMPLEX_TOL
            && self.u2 >= -SIMPLEX_TOL
            && self.u1 + self.u2 <= 1.0 + SIMPLEX_TOL
    }

    pub fn is_interior(&self) -> bool {
        self.u1.is_finite() && self.u2.is_finite() && self.min_component() >= INTERIOR_MARGIN
    }

    pub(crate) fn require_interior(&self) -> Result<()> {
        if self.is_interior() {
            Ok(())
        } else {
            Err(Error::NotInterior {
                u1: self.u1,
                u2: self.u2,
                min: self.min_component(),
                margin: INTERIOR_MARGIN,
            })
        }
    }
}

/// Affine diffusion law `A_ij(u) = α_ij + β_ij u1 + γ_ij u2`.
///
/// Index `[i][j]` addresses the 1-based entry `(i+1, j+1)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub alpha: [[f64; 2]; 2],
    pub beta: [[f64; 2]; 2],
    pub gamma: [[f64; 2]; 2],
}

/// The five parameters left free once the symmetry conditions are imposed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeParameters {
    pub alpha11: f64,
    pub alpha22: f64,
    pub beta11: f64,
    pub beta12: f64,
    pub gamma22: f64,
}

impl CoefficientSet {
    pub fn new(alpha: [[f64; 2]; 2], beta: [[f64; 2]; 2], gamma: [[f64; 2]; 2]) -> Result<Self> {
        let c = Self { alpha, beta, gamma };
        c.validate()?;
        Ok(c)
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, m) in [
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("gamma", &self.gamma),
        ] {
            for i in 0..2 {
                for j in 0..2 {
                    if !m[i][j].is_finite() {
                        return Err(Error::NonFinite(format!("{name}.{}{}", i + 1, j + 1)));
                    }
                }
            }
        }
        Ok(())
    }

    /// Builds the structurally symmetric set determined by the five free
    /// parameters: `α12 = α21 = β21 = γ12 = 0` and
    /// `β22 = β11 − γ21`, `γ11 = γ22 − β12`, `γ21 = α22 − α11 + β12`.
    pub fn from_free(p: FreeParameters) -> Self {
        let mut c = Self::zero();
        c.alpha[0][0] = p.alpha11;
        c.alpha[1][1] = p.alpha22;
        c.beta[0][0] = p.beta11;
        c.beta[0][1] = p.beta12;
        c.gamma[1][1] = p.gamma22;
        c.close_symmetry();
        c
    }

    pub fn free_parameters(&self) -> FreeParameters {
        FreeParameters {
            alpha11: self.alpha[0][0],
            alpha22: self.alpha[1][1],
            beta11: self.beta[0][0],
            beta12: self.beta[0][1],
            gamma22: self.gamma[1][1],
        }
    }

    /// Zeroes the off-structure entries and recomputes `γ21`, `β22`, `γ11`
    /// from the free parameters.
    pub fn close_symmetry(&mut self) {
        self.alpha[0][1] = 0.0;
        self.alpha[1][0] = 0.0;
        self.beta[1][0] = 0.0;
        self.gamma[0][1] = 0.0;
        let p = self.free_parameters();
        let gamma21 = p.alpha22 - p.alpha11 + p.beta12;
        self.gamma[1][0] = gamma21;
        self.beta[1][1] = p.beta11 - gamma21;
        self.gamma[0][0] = p.gamma22 - p.beta12;
    }

    /// The Keller–Segel diffusion matrix `[[1, −u1], [0, 1]]`, kept as a
    /// rejection fixture.
    pub fn keller_segel() -> Self {
        let mut c = Self::zero();
        c.alpha[0][0] = 1.0;
        c.alpha[1][1] = 1.0;
        c.beta[0][1] = -1.0;
        c
    }

    /// `A(u)` for `u` in the closed triangle.
    pub fn diffusion_matrix(&self, u: &SimplexState) -> Result<Mat2> {
        if !u.in_closure() {
            return Err(Error::OutsideSimplex {
                u1: u.u1(),
                u2: u.u2(),
            });
        }
        Ok(self.diffusion_matrix_at(u.u1(), u.u2()))
    }

    /// `A(u)` without a membership check.
    #[inline]
    pub fn diffusion_matrix_at(&self, u1: f64, u2: f64) -> Mat2 {
        let e =
            |i: usize, j: usize| self.alpha[i][j] + self.beta[i][j] * u1 + self.gamma[i][j] * u2;
        Mat2::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }

    /// `∂A/∂u1 = β`.
    pub fn beta_matrix(&self) -> Mat2 {
        to_mat(&self.beta)
    }

    /// `∂A/∂u2 = γ`.
    pub fn gamma_matrix(&self) -> Mat2 {
        to_mat(&self.gamma)
    }

    pub fn alpha_matrix(&self) -> Mat2 {
        to_mat(&self.alpha)
    }

    /// Vertex decomposition `A(u) = Σ_k u_k A^(k)` with `A^(1) = α + β`,
    /// `A^(2) = α + γ`, `A^(3) = α` (using `u1 + u2 + u3 = 1`).
    pub fn vertex_decomposition(&self) -> [Mat2; 3] {
        let a = self.alpha_matrix();
        [a + self.beta_matrix(), a + self.gamma_matrix(), a]
    }
}

fn to_mat(m: &[[f64; 2]; 2]) -> Mat2 {
    Mat2::new(m[0][0], m[0][1], m[1][0], m[1][1])
}

/// Coefficients of the Shigesada–Kawasaki–Teramoto diffusion matrix
/// ```text
/// A(u) = [ a10 + 2 a11 u1 + a12 u2        a12 u1                 ]
///        [ a21 u2                         a20 + a21 u1 + 2 a22 u2 ]
/// ```
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SktCoefficients {
    pub a10: f64,
    pub a20: f64,
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl SktCoefficients {
    pub fn new(a10: f64, a20: f64, a11: f64, a12: f64, a21: f64, a22: f64) -> Result<Self> {
        let s = Self {
            a10,
            a20,
            a11,
            a12,
            a21,
            a22,
        };
        for (name, v) in s.named() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("skt.{name}")));
            }
            if v < 0.0 {
                return Err(Error::Negative {
                    name: format!("skt.{name}"),
                    value: v,
                });
            }
        }
        Ok(s)
    }

    pub fn named(&self) -> [(&'static str, f64); 6] {
        [
            ("a10", self.a10),
            ("a20", self.a20),
            ("a11", self.a11),
            ("a12", self.a12),
            ("a21", self.a21),
            ("a22", self.a22),
        ]
    }

    /// The SKT matrix read as an affine diffusion law.
    pub fn to_general(&self) -> CoefficientSet {
        let mut c = CoefficientSet::zero();
        c.alpha[0][0] = self.a10;
        c.beta[0][0] = 2.0 * self.a11;
        c.gamma[0][0] = self.a12;
        c.beta[0][1] = self.a12;
        c.gamma[1][0] = self.a21;
        c.alpha[1][1] = self.a20;
        c.beta[1][1] = self.a21;
        c.gamma[1][1] = 2.0 * self.a22;
        c
    }

    /// Direct evaluation of the SKT matrix.
    pub fn matrix_at(&self, u1: f64, u2: f64) -> Mat2 {
        Mat2::new(
            self.a10 + 2.0 * self.a11 * u1 + self.a12 * u2,
            self.a12 * u1,
            self.a21 * u2,
            self.a20 + self.a21 * u1 + 2.0 * self.a22 * u2,
        )
    }
}

/// Lotka–Volterra rates; row `i` holds `(b_i0, b_i1, b_i2)` and
/// `f_i(u) = (b_i0 − b_i1 u1 − b_i2 u2) u_i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LotkaVolterra {
    pub b: [[f64; 3]; 2],
}

/// Constant steady state `U` with `f(U) = 0` and `b U = (b10, b20)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub u1: f64,
    pub u2: f64,
}

impl SteadyState {
    pub fn u3(&self) -> f64 {
        1.0 - self.u1 - self.u2
    }

    /// `U ∈ D`: both species present and `U1 + U2 < 1`.
    pub fn is_interior(&self) -> bool {
        self.u1 > 0.0 && self.u2 > 0.0 && self.u1 + self.u2 < 1.0
    }

    pub fn as_state(&self) -> Result<SimplexState> {
        SimplexState::interior(self.u1, self.u2)
    }

    pub fn as_vec(&self) -> Vec2 {
        Vec2::new(self.u1, self.u2)
    }
}

impl LotkaVolterra {
    pub fn new(b: [[f64; 3]; 2]) -> Result<Self> {
        for (i, row) in b.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let name = format!("b.{}{}", i + 1, j);
                if !v.is_finite() {
                    return Err(Error::NonFinite(name));
                }
                if *v < 0.0 {
                    return Err(Error::Negative { name, value: *v });
                }
            }
        }
        Ok(Self { b })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.b.iter().flatten().all(|v| *v == 0.0)
    }

    /// Competition matrix `(b_ij)_{i,j=1,2}`.
    pub fn competition(&self) -> Mat2 {
        Mat2::new(self.b[0][1], self.b[0][2], self.b[1][1], self.b[1][2])
    }

    pub fn birth(&self) -> Vec2 {
        Vec2::new(self.b[0][0], self.b[1][0])
    }

    /// Growth factors `g_i(u) = b_i0 − b_i1 u1 − b_i2 u2`.
    #[inline]
    pub fn growth_at(&self, u1: f64, u2: f64) -> Vec2 {
        Vec2::new(
            self.b[0][0] - self.b[0][1] * u1 - self.b[0][2] * u2,
            self.b[1][0] - self.b[1][1] * u1 - self.b[1][2] * u2,
        )
    }

    /// `f(u)` without a membership check.
    #[inline]
    pub fn source_at(&self, u1: f64, u2: f64) -> Vec2 {
        let g = self.growth_at(u1, u2);
        Vec2::new(g[0] * u1, g[1] * u2)
    }

    pub fn source(&self, u: &SimplexState) -> Result<Vec2> {
        if !u.in_closure() {
            return Err(Error::OutsideSimplex {
                u1: u.u1(),
                u2: u.u2(),
            });
        }
        Ok(self.source_at(u.u1(), u.u2()))
    }

    /// Jacobian `∂f/∂u`.
    pub fn source_jacobian_at(&self, u1: f64, u2: f64) -> Mat2 {
        let g = self.growth_at(u1, u2);
        let b = &self.b;
        Mat2::new(
            g[0] - b[0][1] * u1,
            -b[0][2] * u1,
            -b[1][1] * u2,
            g[1] - b[1][2] * u2,
        )
    }

    /// Closed-form steady state followed by one pass of iterative refinement
    /// on `b U = b0`.
    pub fn steady_state(&self) -> Result<SteadyState> {
        let m = self.competition();
        let det = m.determinant();
        if !(det.abs() >= 1e-14) {
            return Err(Error::SingularCompetition(det));
        }
        let (b10, b20) = (self.b[0][0], self.b[1][0]);
        let (b11, b12, b21, b22) = (self.b[0][1], self.b[0][2], self.b[1][1], self.b[1][2]);
        let mut u = Vec2::new((b10 * b22 - b20 * b12) / det, (b20 * b11 - b10 * b21) / det);
        for _ in 0..2 {
            let r = self.birth() - m * u;
            let du = Vec2::new(b22 * r[0] - b12 * r[1], b11 * r[1] - b21 * r[0]) / det;
            u += du;
        }
        Ok(SteadyState { u1: u[0], u2: u[1] })
    }

    /// The margins `ε_i = 1 − b_i0 / min{b_i1, b_i2}` below which the growth
    /// factor `g_i` is nonpositive near the edge `u1 + u2 = 1`. Infinite
    /// denominators give `−∞` margins when `b_i0 > 0`.
    pub fn edge_margins(&self) -> [f64; 2] {
        let m = |i: usize| {
            let den = self.b[i][1].min(self.b[i][2]);
            if den > 0.0 {
                1.0 - self.b[i][0] / den
            } else if self.b[i][0] == 0.0 {
                1.0
            } else {
                f64::NEG_INFINITY
            }
        };
        [m(0), m(1)]
    }
}

/// Hessian of the entropy density, `H_ij = δ_ij/u_i + 1/u3`; independent of
/// the reference density.
pub fn entropy_hessian(u: &SimplexState) -> Result<Mat2> {
    u.require_interior()?;
    Ok(entropy_hessian_at(u.u1(), u.u2()))
}

#[inline]
pub fn entropy_hessian_at(u1: f64, u2: f64) -> Mat2 {
    let i3 = 1.0 / (1.0 - u1 - u2);
    Mat2::new(1.0 / u1 + i3, i3, i3, 1.0 / u2 + i3)
}

/// Inverse Hessian `diag(u) − u uᵀ`, which is also `du/dw`.
#[inline]
pub fn entropy_hessian_inverse_at(u1: f64, u2: f64) -> Mat2 {
    Mat2::new(u1 * (1.0 - u1), -u1 * u2, -u1 * u2, u2 * (1.0 - u2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn preset_skt() -> SktCoefficients {
        SktCoefficients::new(1.0, 1.5, 1.0, 0.5, 1.0, 0.5).unwrap()
    }

    fn bij_preset() -> LotkaVolterra {
        LotkaVolterra::new([[0.25, 0.5, 0.25], [0.25, 0.25, 0.5]]).unwrap()
    }

    fn random_interior(rng: &mut ChaCha8Rng) -> (f64, f64) {
        loop {
            let (a, b): (f64, f64) = (rng.random(), rng.random());
            if a + b < 1.0 && a > 1e-6 && b > 1e-6 && 1.0 - a - b > 1e-6 {
                return (a, b);
            }
        }
    }

    #[test]
    fn origin_gives_alpha() {
        let c = CoefficientSet::new(
            [[1.0, 2.0], [3.0, 4.0]],
            [[5.0, 6.0], [7.0, 8.0]],
            [[9.0, 10.0], [11.0, 12.0]],
        )
        .unwrap();
        let a = c
            .diffusion_matrix(&SimplexState::new(0.0, 0.0).unwrap())
            .unwrap();
        assert_eq!(a, c.alpha_matrix());
    }

    #[test]
    fn skt_example_values() {
        let c = preset_skt().to_general();
        let a = c
            .diffusion_matrix(&SimplexState::new(0.2, 0.3).unwrap())
            .unwrap();
        let expect = Mat2::new(1.55, 0.1, 0.3, 2.0);
        assert!((a - expect).abs().max() < 1e-14, "{a}");
    }

    #[test]
    fn constant_coefficients_ignore_state() {
        let mut c = CoefficientSet::zero();
        c.alpha = [[1.0, 0.2], [0.3, 2.0]];
        for (u1, u2) in [(0.1, 0.2), (0.5, 0.5), (0.0, 1.0)] {
            assert_eq!(c.diffusion_matrix_at(u1, u2), c.alpha_matrix());
        }
    }

    #[test]
    fn outside_state_rejected() {
        let c = CoefficientSet::zero();
        let u = SimplexState::new_unchecked(0.7, 0.4);
        assert!(matches!(
            c.diffusion_matrix(&u),
            Err(Error::OutsideSimplex { .. })
        ));
        assert!(SimplexState::new(-1e-9, 0.2).is_err());
        assert!(SimplexState::new(-1e-13, 0.2).is_ok());
    }

    #[test]
    fn skt_mapping_entries() {
        assert_eq!(
            SktCoefficients::default().to_general(),
            CoefficientSet::zero()
        );
        let c = preset_skt().to_general();
        assert_eq!(c.alpha[0][0], 1.0);
        assert_eq!(c.beta[0][0], 2.0);
        assert_eq!(c.gamma[0][0], 0.5);
        assert_eq!(c.beta[0][1], 0.5);
        assert_eq!(c.gamma[1][0], 1.0);
        assert_eq!(c.alpha[1][1], 1.5);
        assert_eq!(c.beta[1][1], 1.0);
        assert_eq!(c.gamma[1][1], 1.0);
        // symmetry closure relations hold for this input
        assert_eq!(c.beta[1][1], c.beta[0][0] - c.gamma[1][0]);
        assert_eq!(c.gamma[0][0], c.gamma[1][1] - c.beta[0][1]);
        assert_eq!(c.gamma[1][0], c.alpha[1][1] - c.alpha[0][0] + c.beta[0][1]);
    }

    #[test]
    fn skt_round_trip_against_direct_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let s = SktCoefficients::new(
                rng.random::<f64>() * 3.0,
                rng.random::<f64>() * 3.0,
                rng.random::<f64>() * 3.0,
                rng.random::<f64>() * 3.0,
                rng.random::<f64>() * 3.0,
                rng.random::<f64>() * 3.0,
            )
            .unwrap();
            let (u1, u2) = random_interior(&mut rng);
            let a = s.to_general().diffusion_matrix_at(u1, u2);
            let d = s.matrix_at(u1, u2);
            assert!((a - d).abs().max() < 1e-13);
            let g = s.to_general();
            assert_eq!(g.alpha[0][1], 0.0);
            assert_eq!(g.alpha[1][0], 0.0);
            assert_eq!(g.beta[1][0], 0.0);
            assert_eq!(g.gamma[0][1], 0.0);
        }
    }

    #[test]
    fn negative_skt_rejected() {
        assert!(matches!(
            SktCoefficients::new(1.0, 1.0, -0.1, 0.0, 0.0, 0.0),
            Err(Error::Negative { .. })
        ));
    }

    #[test]
    fn source_vanishes_at_origin_and_steady_state() {
        let lv = bij_preset();
        assert_eq!(
            lv.source(&SimplexState::new(0.0, 0.0).unwrap()).unwrap(),
            Vec2::zeros()
        );
        let u = lv.steady_state().unwrap();
        let f = lv.source_at(u.u1, u.u2);
        assert!(f.amax() < 1e-12);
    }

    #[test]
    fn shifted_source_form_agrees() {
        let lv = bij_preset();
        let steady = lv.steady_state().unwrap();
        let b = lv.competition();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let (u1, u2) = random_interior(&mut rng);
            let f = lv.source_at(u1, u2);
            let d = Vec2::new(u1 - steady.u1, u2 - steady.u2);
            let shifted = Vec2::new(-u1 * (b.row(0) * d)[0], -u2 * (b.row(1) * d)[0]);
            assert!((f - shifted).amax() < 1e-14);
        }
    }

    #[test]
    fn steady_state_bij_preset() {
        // elimination by hand: 0.5 U1 + 0.25 U2 = 0.25, 0.25 U1 + 0.5 U2 = 0.25
        let u = bij_preset().steady_state().unwrap();
        assert!((u.u1 - 1.0 / 3.0).abs() < 1e-15);
        assert!((u.u2 - 1.0 / 3.0).abs() < 1e-15);
        assert!((u.u3() - 1.0 / 3.0).abs() < 1e-15);
        assert!(u.is_interior());
    }

    #[test]
    fn decoupled_logistic_is_outside() {
        let lv = LotkaVolterra::new([[0.7, 0.7, 0.0], [0.4, 0.0, 0.4]]).unwrap();
        let u = lv.steady_state().unwrap();
        assert!((u.u1 - 1.0).abs() < 1e-15 && (u.u2 - 1.0).abs() < 1e-15);
        assert!(!u.is_interior());
    }

    #[test]
    fn singular_competition_rejected() {
        let lv = LotkaVolterra::new([[1.0, 1.0, 1.0], [1.0, 1.0, 1.0]]).unwrap();
        assert!(matches!(
            lv.steady_state(),
            Err(Error::SingularCompetition(_))
        ));
    }

    #[test]
    fn weak_competition_steady_states_are_interior() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut tested = 0;
        while tested < 100 {
            let b: [[f64; 3]; 2] = [
                [rng.random(), rng.random(), rng.random()],
                [rng.random(), rng.random(), rng.random()],
            ];
            // brute-force sign checks of b11/b21 > b10/b20 > b12/b22, with
            // b_i0 ≤ min(b_i1, b_i2) so that the coexistence point sits below the edge
            let wcc =
                b[0][1] * b[1][0] > b[0][0] * b[1][1] && b[0][0] * b[1][2] > b[0][2] * b[1][0];
            let below_edge = b[0][0] <= b[0][1].min(b[0][2]) && b[1][0] <= b[1][1].min(b[1][2]);
            if !(wcc && below_edge) {
                continue;
            }
            let lv = LotkaVolterra::new(b).unwrap();
            let u = lv.steady_state().unwrap();
            assert!(
                u.u1 > 0.0 && u.u2 > 0.0 && u.u1 + u.u2 < 1.0 + 1e-12,
                "{u:?} for {b:?}"
            );
            let f = lv.source_at(u.u1, u.u2);
            assert!(f.amax() < 1e-12);
            tested += 1;
        }
    }

    #[test]
    fn hessian_examples() {
        let h = entropy_hessian(&SimplexState::interior(1.0 / 3.0, 1.0 / 3.0).unwrap()).unwrap();
        assert!((h - Mat2::new(6.0, 3.0, 3.0, 6.0)).abs().max() < 1e-12);
        let h = entropy_hessian(&SimplexState::interior(0.5, 0.25).unwrap()).unwrap();
        assert!((h - Mat2::new(6.0, 4.0, 4.0, 8.0)).abs().max() < 1e-12);
        assert!(entropy_hessian(&SimplexState::new(0.0, 0.5).unwrap()).is_err());
    }

    #[test]
    fn hessian_is_spd_and_inverse_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let (u1, u2) = random_interior(&mut rng);
            let h = entropy_hessian_at(u1, u2);
            assert_eq!(h[(0, 1)], h[(1, 0)]);
            let ev = h.symmetric_eigen().eigenvalues;
            assert!(ev.min() > 0.0);
            let prod = h * entropy_hessian_inverse_at(u1, u2);
            assert!((prod - Mat2::identity()).abs().max() < 1e-6 * h.abs().max());
        }
    }

    #[test]
    fn keller_segel_matrix() {
        let a = CoefficientSet::keller_segel().diffusion_matrix_at(0.5, 0.2);
        assert_eq!(a, Mat2::new(1.0, -0.5, 0.0, 1.0));
    }

    #[test]
    fn edge_margins_of_corollary() {
        let lv = LotkaVolterra::new([[0.2, 0.5, 0.4], [0.1, 0.2, 0.4]]).unwrap();
        let e = lv.edge_margins();
        assert!((e[0] - 0.5).abs() < 1e-15);
        assert!((e[1] - 0.5).abs() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn coeffs() -> impl Strategy<Value = CoefficientSet> {
            proptest::array::uniform12(-5.0f64..5.0).prop_map(|v| CoefficientSet {
                alpha: [[v[0], v[1]], [v[2], v[3]]],
                beta: [[v[4], v[5]], [v[6], v[7]]],
                gamma: [[v[8], v[9]], [v[10], v[11]]],
            })
        }

        fn point() -> impl Strategy<Value = (f64, f64)> {
            (0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b)| {
                if a + b > 1.0 {
                    (1.0 - a, 1.0 - b)
                } else {
                    (a, b)
                }
            })
        }

        proptest! {
            #[test]
            fn diffusion_matrix_is_affine(c in coeffs(), p in point(), q in point(), lam in 0.0f64..1.0) {
                let mix = (lam * p.0 + (1.0 - lam) * q.0, lam * p.1 + (1.0 - lam) * q.1);
                let lhs = c.diffusion_matrix_at(mix.0, mix.1);
                let rhs = c.diffusion_matrix_at(p.0, p.1) * lam + c.diffusion_matrix_at(q.0, q.1) * (1.0 - lam);
                prop_assert!((lhs - rhs).abs().max() < 1e-13);
            }

            #[test]
            fn closure_produces_symmetric_structure(a11 in -3.0f64..3.0, a22 in -3.0f64..3.0,
                b11 in -3.0f64..3.0, b12 in -3.0f64..3.0, g22 in -3.0f64..3.0) {
                let c = CoefficientSet::from_free(FreeParameters { alpha11: a11, alpha22: a22, beta11: b11, beta12: b12, gamma22: g22 });
                prop_assert_eq!(c.free_parameters().beta12, b12);
                prop_assert!((c.beta[1][1] - (c.beta[0][0] - c.gamma[1][0])).abs() < 1e-15);
                prop_assert!((c.gamma[0][0] - (c.gamma[1][1] - c.beta[0][1])).abs() < 1e-15);
            }
        }
    }
}
