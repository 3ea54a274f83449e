//! CSV writers. Floats use Rust's shortest round-trip formatting.

use std::io::Write;

use crate::entropy::StateField;
use crate::error::Result;

use super::coupled::TimeSeries;
use super::rho_sigma::{RhoSigmaRecord, RhoSigmaState};
use super::Grid1D;

pub const SERIES_HEADER: &str =
    "t,entropy,phi,mass1,mass2,min_u1,min_u2,max_sum,fisher1,fisher2,newton_iters";
pub const RHO_SIGMA_SERIES_HEADER: &str =
    "t,mass_rho,mass_sigma,min_rho,max_rho,min_sigma,xi,h_minus1,newton_iters";

fn forced_suffix(forced: bool) -> &'static str {
    if forced {
        ",forced"
    } else {
        ""
    }
}

/// Writes the time series; forced runs get a trailing `forced` column set
/// to 1 on every row.
pub fn write_series<W: Write>(out: &mut W, series: &TimeSeries, forced: bool) -> Result<()> {
    writeln!(out, "{SERIES_HEADER}{}", forced_suffix(forced))?;
    for r in &series.records {
        write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.entropy,
            r.phi,
            r.mass[0],
            r.mass[1],
            r.min_u[0],
            r.min_u[1],
            r.max_sum,
            r.fisher[0],
            r.fisher[1],
            r.newton_iters
        )?;
        if forced {
            write!(out, ",1")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_snapshot<W: Write>(
    out: &mut W,
    grid: &Grid1D,
    field: &StateField,
    forced: bool,
) -> Result<()> {
    writeln!(out, "x,u1,u2{}", forced_suffix(forced))?;
    for (x, c) in grid.centers().iter().zip(field.cells()) {
        write!(out, "{},{},{}", x, c.u1(), c.u2())?;
        if forced {
            write!(out, ",1")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_rho_sigma_series<W: Write>(
    out: &mut W,
    records: &[RhoSigmaRecord],
    forced: bool,
) -> Result<()> {
    writeln!(out, "{RHO_SIGMA_SERIES_HEADER}{}", forced_suffix(forced))?;
    for r in records {
        write!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.t,
            r.mass_rho,
            r.mass_sigma,
            r.min_rho,
            r.max_rho,
            r.min_sigma,
            r.xi,
            r.h_minus1,
            r.newton_iters
        )?;
        if forced {
            write!(out, ",1")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_rho_sigma_snapshot<W: Write>(
    out: &mut W,
    grid: &Grid1D,
    s: &RhoSigmaState,
    forced: bool,
) -> Result<()> {
    writeln!(out, "x,rho,sigma{}", forced_suffix(forced))?;
    for ((x, r), q) in grid.centers().iter().zip(&s.rho).zip(&s.sigma) {
        write!(out, "{x},{r},{q}")?;
        if forced {
            write!(out, ",1")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
