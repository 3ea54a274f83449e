//! Two-species cross-diffusion systems with affine diffusivities on the
//! triangle `{u1 > 0, u2 > 0, u1 + u2 < 1}`: exact admissibility conditions
//! with sampled confirmation, entropy functionals, and an entropy-variable
//! finite-volume solver that keeps every cell inside the triangle.

pub mod admissibility;
pub mod cli;
pub mod config;
pub mod entropy;
pub mod error;
pub mod linalg;
pub mod model;
pub mod solver;

pub use admissibility::{admissibility_report, AdmissibilityReport, ConditionCheck};
pub use entropy::{ReferenceDensity, StateField};
pub use error::{Error, Result};
pub use model::{
    CoefficientSet, FreeParameters, LotkaVolterra, SimplexState, SktCoefficients, SteadyState,
};
