//! Command-line front end. [`run_cli`] is the whole program minus process
//! exit, so it can be driven from tests.

pub mod compare;
pub mod sweep;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::admissibility::{admissibility_report, check_existence, ReportOptions};
use crate::config::{load_spec, RunSpec};
use crate::error::Error;
use crate::solver::output::{
    write_rho_sigma_series, write_rho_sigma_snapshot, write_series, write_snapshot,
};
use crate::solver::{run_rho_sigma, CoupledSolver, ScalarLaws, SolverConfig};

pub use compare::{compare_levels, CompareLevel, CompareReport};
pub use sweep::{apply_axes, run_sweep, Boundary, SweepPoint, SweepReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONDITION: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "crossdiff",
    version,
    about = "Admissibility checks and simulations for two-species cross-diffusion"
)]
pub struct Cli {
    /// Output directory for CSV files, manifests and reports.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the seed from the configuration file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Simulate even when the existence conditions fail.
    #[arg(long, global = true)]
    pub force: bool,
    /// Worker threads for sweeps and comparisons.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate every parameter condition and print the report as JSON.
    Check { file: PathBuf },
    /// Integrate the coupled system; accepts a config file or a run manifest.
    Simulate { config: PathBuf },
    /// Integrate the decoupled (rho, sigma) system.
    RhoSigma { config: PathBuf },
    /// Compare coupled and decoupled solutions over refinement levels.
    Compare { config: PathBuf },
    /// Evaluate conditions over a grid of coefficient values.
    Sweep { file: PathBuf },
}

/// Written next to the outputs of every run. Feeding it back to `simulate`
/// reproduces the CSV files exactly.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: SolverConfig,
    pub seed: u64,
    pub forced: bool,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
    pub summary: RunSummary,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: usize,
    pub halvings: usize,
    pub clipped: usize,
    pub max_entropy_increase: Option<f64>,
    pub max_phi_increase: Option<f64>,
    /// Largest distance by which any cell left the closed triangle.
    pub max_bound_violation: f64,
    pub min_component: f64,
    pub final_l2_to_steady: Option<f64>,
    pub max_xi: Option<f64>,
    pub max_h_minus1: Option<f64>,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. }
            | Error::Config(_)
            | Error::Json(_)
            | Error::NonFinite(_)
            | Error::Negative { .. } => EXIT_PARSE,
            Error::Precondition(_) | Error::SingularCompetition(_) => EXIT_CONDITION,
            Error::Io(_) => EXIT_PARSE,
            _ => EXIT_SOLVER,
        };
        Self::new(code, e.to_string())
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{e}")
            } else {
                write!(stdout, "{e}")
            };
            return code;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    match &cli.command {
        Command::Check { file } => cmd_check(cli, file, stdout),
        Command::Simulate { config } => cmd_simulate(cli, config, stdout, stderr),
        Command::RhoSigma { config } => cmd_rho_sigma(cli, config, stdout),
        Command::Compare { config } => cmd_compare(cli, config, stdout),
        Command::Sweep { file } => cmd_sweep(cli, file, stdout),
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(EXIT_PARSE, format!("{}: {e}", path.display()))
}

fn load(cli: &Cli, path: &Path) -> std::result::Result<RunSpec, Failure> {
    let mut spec = load_spec(path).map_err(|e| match e {
        Error::Io(io) => io_failure(path, io),
        other => other.into(),
    })?;
    if let Some(seed) = cli.seed {
        spec.solver.seed = seed;
    }
    Ok(spec)
}

fn out_dir(cli: &Cli) -> std::result::Result<PathBuf, Failure> {
    let dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("crossdiff-out"));
    fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    Ok(dir)
}

fn write_file(path: &Path, bytes: &[u8]) -> std::result::Result<(), Failure> {
    fs::write(path, bytes)
        .map_err(|e| Failure::new(EXIT_SOLVER, format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> std::result::Result<String, Failure> {
    serde_json::to_string_pretty(v).map_err(|e| Failure::from(Error::Json(e)))
}

fn cmd_check(cli: &Cli, file: &Path, stdout: &mut dyn Write) -> CmdResult {
    let spec = load(cli, file)?;
    let report = admissibility_report(
        &spec.coefficients,
        spec.sources.as_ref(),
        spec.skt.as_ref(),
        ReportOptions {
            oracle_samples: spec.oracle_samples,
            seed: spec.solver.seed,
        },
    );
    let json = to_json(&report)?;
    let _ = writeln!(stdout, "{json}");
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
        write_file(&dir.join("report.json"), json.as_bytes())?;
    }
    Ok(if report.verdict("existence") {
        EXIT_OK
    } else {
        EXIT_CONDITION
    })
}

/// Reads a configuration file, or the configuration stored in a manifest.
fn load_solver_config(
    cli: &Cli,
    path: &Path,
) -> std::result::Result<(SolverConfig, Option<bool>), Failure> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
        let m: RunManifest =
            serde_json::from_str(&text).map_err(|e| Failure::from(Error::Json(e)))?;
        let mut cfg = m.config;
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        Ok((cfg, Some(m.forced)))
    } else {
        Ok((load(cli, path)?.solver, None))
    }
}

fn gate(
    cli: &Cli,
    cfg: &SolverConfig,
    stderr: &mut dyn Write,
) -> std::result::Result<bool, Failure> {
    let ex = check_existence(&cfg.coefficients);
    if ex.holds {
        return Ok(false);
    }
    let failing: Vec<String> = ex
        .margins
        .iter()
        .filter(|(_, v)| **v <= 0.0)
        .map(|(k, _)| k.clone())
        .chain(ex.violated_equalities())
        .collect();
    if cli.force {
        let _ = writeln!(
            stderr,
            "warning: existence conditions fail ({}); forced run",
            failing.join(", ")
        );
        Ok(true)
    } else {
        Err(Failure::new(
            EXIT_CONDITION,
            format!(
                "existence conditions fail ({}); pass --force to simulate anyway",
                failing.join(", ")
            ),
        ))
    }
}

#[derive(Serialize)]
struct FailureDump<'a> {
    error: String,
    time: f64,
    x: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    config: &'a SolverConfig,
}

fn cmd_simulate(
    cli: &Cli,
    path: &Path,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CmdResult {
    let (cfg, manifest_forced) = load_solver_config(cli, path)?;
    let forced = gate(cli, &cfg, stderr)? || manifest_forced.unwrap_or(false);
    let dir = out_dir(cli)?;
    let start = Instant::now();
    let mut solver = CoupledSolver::new(cfg.clone())?;
    if let Err(e) = solver.run_to_end() {
        let dump_path = dir.join("failure_dump.json");
        let state = solver.state();
        let dump = FailureDump {
            error: e.to_string(),
            time: solver.time(),
            x: cfg.grid.centers(),
            u1: state.u1(),
            u2: state.u2(),
            config: &cfg,
        };
        write_file(&dump_path, to_json(&dump)?.as_bytes())?;
        return Err(Failure::new(
            EXIT_SOLVER,
            format!("{e}; state dumped to {}", dump_path.display()),
        ));
    }
    let out = solver.into_output();
    let mut outputs = Vec::new();
    let mut buf = Vec::new();
    write_series(&mut buf, &out.series, forced)?;
    write_file(&dir.join("series.csv"), &buf)?;
    outputs.push("series.csv".to_string());
    for (k, snap) in out.snapshots.iter().enumerate() {
        let name = format!("snapshot_{k:03}.csv");
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &cfg.grid, &snap.field, forced)?;
        write_file(&dir.join(&name), &buf)?;
        outputs.push(name);
    }
    let recs = &out.series.records;
    let has_phi = out.steady.is_some();
    let summary = RunSummary {
        steps: recs.len() - 1,
        halvings: out.halvings,
        clipped: out.series.total_clipped(),
        max_entropy_increase: (recs.len() > 1).then(|| out.series.max_entropy_increase()),
        max_phi_increase: (has_phi && recs.len() > 1).then(|| out.series.max_phi_increase()),
        max_bound_violation: recs
            .iter()
            .map(|r| (-r.min_u[0]).max(-r.min_u[1]).max(r.max_sum - 1.0).max(0.0))
            .fold(0.0, f64::max),
        min_component: recs
            .iter()
            .map(|r| r.min_u[0].min(r.min_u[1]).min(1.0 - r.max_sum))
            .fold(f64::INFINITY, f64::min),
        final_l2_to_steady: out.final_l2_to_steady(),
        max_xi: None,
        max_h_minus1: None,
    };
    let manifest = RunManifest {
        command: "simulate".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        config: cfg,
        forced,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        outputs,
        summary,
    };
    let json = to_json(&manifest)?;
    write_file(&dir.join("manifest.json"), json.as_bytes())?;
    let _ = writeln!(stdout, "{json}");
    Ok(EXIT_OK)
}

fn cmd_rho_sigma(cli: &Cli, path: &Path, stdout: &mut dyn Write) -> CmdResult {
    let (cfg, manifest_forced) = load_solver_config(cli, path)?;
    ScalarLaws::new(&cfg.coefficients)?;
    let forced = manifest_forced.unwrap_or(false);
    let dir = out_dir(cli)?;
    let start = Instant::now();
    let out = run_rho_sigma(&cfg)?;
    let mut outputs = Vec::new();
    let mut buf = Vec::new();
    write_rho_sigma_series(&mut buf, &out.records, forced)?;
    write_file(&dir.join("rho_sigma_series.csv"), &buf)?;
    outputs.push("rho_sigma_series.csv".to_string());
    for (k, (_, s)) in out.snapshots.iter().enumerate() {
        let name = format!("rho_sigma_{k:03}.csv");
        let mut buf = Vec::new();
        write_rho_sigma_snapshot(&mut buf, &cfg.grid, s, forced)?;
        write_file(&dir.join(&name), &buf)?;
        outputs.push(name);
    }
    let (u1, u2) = out.state.components();
    let min_component = u1
        .iter()
        .zip(&u2)
        .map(|(a, b)| a.min(*b).min(1.0 - a - b))
        .fold(f64::INFINITY, f64::min);
    let finite_max = |f: fn(&crate::solver::RhoSigmaRecord) -> f64| {
        out.records
            .iter()
            .map(f)
            .filter(|v| v.is_finite())
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
    };
    let summary = RunSummary {
        steps: out.records.len() - 1,
        min_component,
        max_bound_violation: (-min_component).max(0.0),
        max_xi: finite_max(|r| r.xi),
        max_h_minus1: finite_max(|r| r.h_minus1),
        ..Default::default()
    };
    let manifest = RunManifest {
        command: "rho-sigma".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        config: cfg,
        forced,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        outputs,
        summary,
    };
    let json = to_json(&manifest)?;
    write_file(&dir.join("manifest.json"), json.as_bytes())?;
    let _ = writeln!(stdout, "{json}");
    Ok(EXIT_OK)
}

fn thread_pool(cli: &Cli) -> std::result::Result<rayon::ThreadPool, Failure> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Failure::new(EXIT_PARSE, "--jobs must be at least 1"));
        }
        b = b.num_threads(j);
    }
    b.build()
        .map_err(|e| Failure::new(EXIT_SOLVER, e.to_string()))
}

fn cmd_compare(cli: &Cli, path: &Path, stdout: &mut dyn Write) -> CmdResult {
    let spec = load(cli, path)?;
    ScalarLaws::new(&spec.coefficients)?;
    let pool = thread_pool(cli)?;
    let report = pool.install(|| compare_levels(&spec.solver, spec.compare_levels.max(3)))?;
    let json = to_json(&report)?;
    let _ = writeln!(stdout, "{json}");
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
        write_file(&dir.join("compare.json"), json.as_bytes())?;
    }
    if report.monotone {
        Ok(EXIT_OK)
    } else {
        Err(Failure::new(
            EXIT_SOLVER,
            "discrepancy does not decrease under refinement",
        ))
    }
}

fn cmd_sweep(cli: &Cli, path: &Path, stdout: &mut dyn Write) -> CmdResult {
    let spec = load(cli, path)?;
    let pool = thread_pool(cli)?;
    let report = pool.install(|| run_sweep(&spec, cli.force));
    let json = to_json(&report)?;
    let _ = writeln!(stdout, "{json}");
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
        write_file(&dir.join("sweep.json"), json.as_bytes())?;
    }
    Ok(EXIT_OK)
}
