use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::solver::{l2_distance, run, run_rho_sigma, Grid1D, ScalarLaws, SolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareLevel {
    pub cells: usize,
    pub dx: f64,
    pub dt: f64,
    /// `‖(ρ, σ)_coupled − (ρ, σ)_decoupled‖_{L²}` at the final time.
    pub discrepancy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub levels: Vec<CompareLevel>,
    /// Observed orders `log2(e_k / e_{k+1})` between consecutive levels.
    pub orders: Vec<f64>,
    /// Discrepancies never increase from one level to the next.
    pub monotone: bool,
}

/// Runs the coupled and the decoupled solver at `levels` refinement levels,
/// halving `dx` and `dt` together starting from `base`.
pub fn compare_levels(base: &SolverConfig, levels: usize) -> Result<CompareReport> {
    ScalarLaws::new(&base.coefficients)?;
    let levels = (0..levels)
        .into_par_iter()
        .map(|k| {
            let mut cfg = base.clone();
            cfg.grid = Grid1D::new(base.grid.n_cells() << k, base.grid.length())?;
            cfg.dt = base.dt / (1u64 << k) as f64;
            cfg.output_times.clear();
            let coupled = run(&cfg)?;
            let decoupled = run_rho_sigma(&cfg)?;
            let (u1, u2) = (coupled.final_state.u1(), coupled.final_state.u2());
            let rho: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a + b).collect();
            let sigma: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a - b).collect();
            let dx = cfg.grid.dx();
            let discrepancy = l2_distance(&rho, &decoupled.state.rho, dx).hypot(l2_distance(
                &sigma,
                &decoupled.state.sigma,
                dx,
            ));
            Ok(CompareLevel {
                cells: cfg.grid.n_cells(),
                dx,
                dt: cfg.dt,
                discrepancy,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let orders = levels
        .windows(2)
        .map(|p| (p[0].discrepancy / p[1].discrepancy).log2())
        .collect();
    let monotone = levels
        .windows(2)
        .all(|p| p[1].discrepancy <= p[0].discrepancy);
    Ok(CompareReport {
        levels,
        orders,
        monotone,
    })
}
