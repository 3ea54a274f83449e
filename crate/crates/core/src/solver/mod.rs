//! Finite-volume time integration on a uniform 1-D grid with zero-flux ends:
//! the coupled system in entropy variables and the decoupled `(ρ, σ)`
//! system available under the uniqueness conditions.

pub mod coupled;
mod grid;
pub mod initial;
pub mod output;
pub mod rho_sigma;

pub use coupled::{
    l2_distance, l2_distance_to, run, step, CoupledSolver, Record, RunOutput, Snapshot,
    SolverConfig, StepReport, TimeSeries,
};
pub use grid::Grid1D;
pub use initial::{project_to_simplex, InitialData};
pub use rho_sigma::{
    d_of_rho, f_of_rho, h_minus1_seminorm, rho_step, run_rho_sigma, sigma_step, v_of_rho, Drift,
    RhoSigmaOutput, RhoSigmaRecord, RhoSigmaState, ScalarLaws,
};
