use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entropy::StateField;
use crate::error::{Error, Result};
use crate::model::SimplexState;

use super::Grid1D;

/// Margin used when projecting initial data into the triangle.
pub const PROJECTION_MARGIN: f64 = 1e-6;

/// Initial-data presets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialData {
    Constant {
        u1: f64,
        u2: f64,
    },
    /// `u1 = b1 + a sin(2π m x/L)`, `u2 = b2 + a cos(2π m x/L)`; zero mean
    /// perturbation for integer `m ≥ 1`. A missing base uses the steady
    /// state when sources are present and the barycentre otherwise.
    SinePerturbation {
        base: Option<[f64; 2]>,
        amplitude: f64,
        mode: u32,
    },
    /// `left` on `x < position·L`, `right` elsewhere.
    Step {
        left: [f64; 2],
        right: [f64; 2],
        position: f64,
    },
    /// Independent uniform samples from the sub-triangle
    /// `{u_i ≥ margin}`, seeded by the run seed.
    Random {
        margin: f64,
    },
}

impl Default for InitialData {
    fn default() -> Self {
        Self::Constant {
            u1: 1.0 / 3.0,
            u2: 1.0 / 3.0,
        }
    }
}

/// Barycentric clamp: raises every component of `(u1, u2, u3)` to at least
/// `margin` and rescales the excess so the three still sum to one. Returns
/// the input unchanged when it already satisfies the margin.
pub fn project_to_simplex(u1: f64, u2: f64, margin: f64) -> (f64, f64) {
    let u = [u1, u2, 1.0 - u1 - u2];
    if u.iter().all(|v| *v >= margin) {
        return (u1, u2);
    }
    let v = u.map(|x| if x.is_finite() { x.max(margin) } else { margin });
    let excess: f64 = v.iter().map(|x| x - margin).sum();
    let room = 1.0 - 3.0 * margin;
    if excess <= 0.0 {
        return (1.0 / 3.0, 1.0 / 3.0);
    }
    let s = room / excess;
    (margin + (v[0] - margin) * s, margin + (v[1] - margin) * s)
}

impl InitialData {
    /// Evaluates the preset on `grid`, projecting every cell into the
    /// triangle with [`PROJECTION_MARGIN`].
    pub fn realize(&self, grid: &Grid1D, default_base: [f64; 2], seed: u64) -> Result<StateField> {
        let n = grid.n_cells();
        let raw: Vec<(f64, f64)> = match self {
            Self::Constant { u1, u2 } => vec![(*u1, *u2); n],
            Self::SinePerturbation {
                base,
                amplitude,
                mode,
            } => {
                let [b1, b2] = base.unwrap_or(default_base);
                grid.centers()
                    .iter()
                    .map(|x| {
                        let th = 2.0 * PI * (*mode as f64) * x / grid.length();
                        (b1 + amplitude * th.sin(), b2 + amplitude * th.cos())
                    })
                    .collect()
            }
            Self::Step {
                left,
                right,
                position,
            } => grid
                .centers()
                .iter()
                .map(|x| {
                    let s = if *x < position * grid.length() {
                        left
                    } else {
                        right
                    };
                    (s[0], s[1])
                })
                .collect(),
            Self::Random { margin } => {
                if !(*margin >= 0.0 && *margin < 1.0 / 3.0) {
                    return Err(Error::Config(format!(
                        "random margin {margin} must lie in [0, 1/3)"
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n)
                    .map(|_| {
                        // uniform on the standard triangle via sorted uniforms
                        let (a, b): (f64, f64) = (rng.random(), rng.random());
                        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                        let room = 1.0 - 3.0 * margin;
                        (margin + room * lo, margin + room * (hi - lo))
                    })
                    .collect()
            }
        };
        if let Some((a, b)) = raw.iter().find(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(Error::Config(format!(
                "initial data not finite: ({a}, {b})"
            )));
        }
        let cells = raw
            .into_iter()
            .map(|(a, b)| {
                let (p, q) = project_to_simplex(a, b, PROJECTION_MARGIN);
                SimplexState::new(p, q)
            })
            .collect::<Result<Vec<_>>>()?;
        StateField::new(cells, grid.dx())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_keeps_interior_points() {
        assert_eq!(project_to_simplex(0.2, 0.3, 1e-6), (0.2, 0.3));
        let (a, b) = project_to_simplex(-0.1, 0.7, 1e-6);
        assert!(a >= 1e-6 && b >= 1e-6 && 1.0 - a - b >= 1e-6 - 1e-15);
        let (a, b) = project_to_simplex(0.8, 0.5, 1e-6);
        assert!((1.0 - a - b - 1e-6).abs() < 1e-15);
        assert!(a > b);
    }

    #[test]
    fn sine_perturbation_has_zero_mean() {
        let g = Grid1D::new(64, 1.0).unwrap();
        let f = InitialData::SinePerturbation {
            base: None,
            amplitude: 0.1,
            mode: 1,
        }
        .realize(&g, [1.0 / 3.0, 1.0 / 3.0], 0)
        .unwrap();
        let m = f.masses();
        assert!((m[0] - 1.0 / 3.0).abs() < 1e-14 && (m[1] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn random_data_is_seeded_and_inside() {
        let g = Grid1D::new(32, 1.0).unwrap();
        let p = InitialData::Random { margin: 0.05 };
        let a = p.realize(&g, [0.0; 2], 3).unwrap();
        let b = p.realize(&g, [0.0; 2], 3).unwrap();
        let c = p.realize(&g, [0.0; 2], 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.min_component() >= 0.05 - 1e-15);
    }

    #[test]
    fn step_preset() {
        let g = Grid1D::new(4, 1.0).unwrap();
        let f = InitialData::Step {
            left: [0.6, 0.1],
            right: [0.1, 0.6],
            position: 0.5,
        }
        .realize(&g, [0.0; 2], 0)
        .unwrap();
        assert_eq!(f.u1(), vec![0.6, 0.6, 0.1, 0.1]);
    }
}
