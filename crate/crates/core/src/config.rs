//! Flat `key = value` configuration files. `#` starts a comment, blank lines
//! are ignored, and every key may appear at most once. Coefficient keys that
//! are missing default to zero.
//!
//! ```text
//! alpha.11 = 1        # or skt.a10 ... skt.a22, not both
//! beta.12 = 0.5
//! b.10 = 0.25         # Lotka-Volterra rates b.10 ... b.22
//! grid.cells = 64
//! dt = 0.01
//! init.kind = sine-perturbation
//! sweep.beta.12 = 0:3:31
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CoefficientSet, LotkaVolterra, SktCoefficients};
use crate::solver::{Drift, Grid1D, InitialData, SolverConfig};

const GENERAL_KEYS: [&str; 12] = [
    "alpha.11", "alpha.12", "alpha.21", "alpha.22", "beta.11", "beta.12", "beta.21", "beta.22",
    "gamma.11", "gamma.12", "gamma.21", "gamma.22",
];
const SKT_KEYS: [&str; 6] = [
    "skt.a10", "skt.a20", "skt.a11", "skt.a12", "skt.a21", "skt.a22",
];
const SOURCE_KEYS: [&str; 6] = ["b.10", "b.11", "b.12", "b.20", "b.21", "b.22"];
const OTHER_KEYS: [&str; 25] = [
    "grid.cells",
    "grid.length",
    "dt",
    "t_end",
    "newton.tol",
    "newton.max_iter",
    "regularization",
    "seed",
    "output.times",
    "drift",
    "init.kind",
    "init.u1",
    "init.u2",
    "init.amplitude",
    "init.mode",
    "init.left.u1",
    "init.left.u2",
    "init.right.u1",
    "init.right.u2",
    "init.position",
    "init.margin",
    "oracle.samples",
    "compare.levels",
    "sweep.simulate",
    "sweep.t_end",
];

/// Coefficient names a sweep may move. The last three are dependent
/// entries; moving one adjusts a free parameter so the symmetry relations
/// still hold.
pub const SWEEP_AXES: [&str; 14] = [
    "alpha.11", "alpha.22", "beta.11", "beta.12", "gamma.22", "gamma.21", "gamma.11", "beta.22",
    "b.10", "b.11", "b.12", "b.20", "b.21", "b.22",
];

/// One sweep axis: `count` evenly spaced values from `start` to `stop`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

/// A parsed configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub coefficients: CoefficientSet,
    /// Present when the file used the `skt.*` keys.
    pub skt: Option<SktCoefficients>,
    /// Present when any `b.*` key was given.
    pub sources: Option<LotkaVolterra>,
    pub solver: SolverConfig,
    pub oracle_samples: usize,
    pub compare_levels: usize,
    pub sweep: Vec<SweepAxis>,
    pub sweep_simulate: bool,
    /// Final time of the short runs attached to sweep points.
    pub sweep_t_end: f64,
}

fn parse_err(key: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        key: key.to_string(),
        message: message.into(),
    }
}

struct Entries(BTreeMap<String, String>);

impl Entries {
    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| parse_err(key, format!("expected a finite number, got `{v}`")))
            })
            .transpose()
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        self.take(key)
            .map(|v| {
                v.parse::<usize>().map_err(|_| {
                    parse_err(key, format!("expected a nonnegative integer, got `{v}`"))
                })
            })
            .transpose()
    }

    fn bool(&mut self, key: &str) -> Result<Option<bool>> {
        self.take(key)
            .map(|v| match v.as_str() {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(parse_err(key, format!("expected true or false, got `{v}`"))),
            })
            .transpose()
    }
}

fn split_lines(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            key: line.to_string(),
            message: format!("line {}: expected `key = value`", lineno + 1),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(parse_err("", format!("line {}: empty key", lineno + 1)));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(parse_err(k, "key given more than once"));
        }
    }
    Ok(map)
}

fn parse_axis(key: &str, name: &str, v: &str) -> Result<SweepAxis> {
    if !SWEEP_AXES.contains(&name) {
        return Err(parse_err(key, format!("`{name}` cannot be swept")));
    }
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    let bad = || parse_err(key, format!("expected `start:stop:count`, got `{v}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    if count == 0 || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    let values = if count == 1 {
        vec![start]
    } else {
        (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect()
    };
    Ok(SweepAxis {
        name: name.to_string(),
        values,
    })
}

fn pair(e: &mut Entries, k1: &str, k2: &str) -> Result<Option<[f64; 2]>> {
    match (e.f64(k1)?, e.f64(k2)?) {
        (Some(a), Some(b)) => Ok(Some([a, b])),
        (None, None) => Ok(None),
        (Some(_), None) => Err(parse_err(k2, format!("required together with `{k1}`"))),
        (None, Some(_)) => Err(parse_err(k1, format!("required together with `{k2}`"))),
    }
}

fn parse_initial(e: &mut Entries) -> Result<InitialData> {
    let kind = e.take("init.kind");
    let init = match kind.as_deref() {
        None | Some("constant") => {
            let [u1, u2] = pair(e, "init.u1", "init.u2")?.unwrap_or([1.0 / 3.0, 1.0 / 3.0]);
            InitialData::Constant { u1, u2 }
        }
        Some("sine-perturbation") => InitialData::SinePerturbation {
            base: pair(e, "init.u1", "init.u2")?,
            amplitude: e.f64_or("init.amplitude", 0.1)?,
            mode: match e.usize("init.mode")? {
                Some(m) => {
                    u32::try_from(m).map_err(|_| parse_err("init.mode", "mode too large"))?
                }
                None => 1,
            },
        },
        Some("step") => InitialData::Step {
            left: pair(e, "init.left.u1", "init.left.u2")?
                .ok_or_else(|| parse_err("init.left.u1", "step data needs a left state"))?,
            right: pair(e, "init.right.u1", "init.right.u2")?
                .ok_or_else(|| parse_err("init.right.u1", "step data needs a right state"))?,
            position: e.f64_or("init.position", 0.5)?,
        },
        Some("random") => InitialData::Random {
            margin: e.f64_or("init.margin", 0.05)?,
        },
        Some(other) => {
            return Err(parse_err(
                "init.kind",
                format!("unknown preset `{other}` (constant, sine-perturbation, step, random)"),
            ))
        }
    };
    Ok(init)
}

/// Parses the text of a configuration file.
pub fn parse_spec(text: &str) -> Result<RunSpec> {
    let raw = split_lines(text)?;
    let mut sweep = Vec::new();
    let mut rest = BTreeMap::new();
    for (k, v) in raw {
        if let Some(axis) = k.strip_prefix("sweep.").filter(|a| SWEEP_AXES.contains(a)) {
            sweep.push(parse_axis(&k, axis, &v)?);
        } else if GENERAL_KEYS.contains(&k.as_str())
            || SKT_KEYS.contains(&k.as_str())
            || SOURCE_KEYS.contains(&k.as_str())
            || OTHER_KEYS.contains(&k.as_str())
        {
            rest.insert(k, v);
        } else {
            return Err(parse_err(&k, "unknown key"));
        }
    }
    let mut e = Entries(rest);

    let has_general = GENERAL_KEYS.iter().find(|k| e.0.contains_key(**k)).copied();
    let has_skt = SKT_KEYS.iter().find(|k| e.0.contains_key(**k)).copied();
    if let (Some(g), Some(s)) = (has_general, has_skt) {
        return Err(parse_err(
            s,
            format!("SKT keys cannot be combined with general coefficients such as `{g}`"),
        ));
    }
    let (coefficients, skt) = if has_skt.is_some() {
        let mut v = [0.0; 6];
        for (slot, key) in v.iter_mut().zip(SKT_KEYS) {
            *slot = e.f64_or(key, 0.0)?;
            if *slot < 0.0 {
                return Err(parse_err(key, "SKT coefficients must be nonnegative"));
            }
        }
        let s = SktCoefficients::new(v[0], v[1], v[2], v[3], v[4], v[5])?;
        (s.to_general(), Some(s))
    } else {
        let mut m = [[[0.0; 2]; 2]; 3];
        for (n, key) in GENERAL_KEYS.iter().enumerate() {
            m[n / 4][(n % 4) / 2][n % 2] = e.f64_or(key, 0.0)?;
        }
        (CoefficientSet::new(m[0], m[1], m[2])?, None)
    };

    let sources = if SOURCE_KEYS.iter().any(|k| e.0.contains_key(*k)) {
        let mut b = [[0.0; 3]; 2];
        for (n, key) in SOURCE_KEYS.iter().enumerate() {
            let v = e.f64_or(key, 0.0)?;
            if v < 0.0 {
                return Err(parse_err(key, "source rates must be nonnegative"));
            }
            b[n / 3][n % 3] = v;
        }
        Some(LotkaVolterra::new(b)?)
    } else {
        None
    };

    let cells = e.usize("grid.cells")?.unwrap_or(64);
    let length = e.f64_or("grid.length", 1.0)?;
    let grid =
        Grid1D::new(cells, length).map_err(|err| parse_err("grid.cells", err.to_string()))?;
    let mut solver = SolverConfig::new(coefficients, grid);
    solver.sources = sources;
    solver.dt = e.f64_or("dt", solver.dt)?;
    solver.t_end = e.f64_or("t_end", solver.t_end)?;
    solver.newton_tol = e.f64_or("newton.tol", solver.newton_tol)?;
    solver.newton_max_iter = e
        .usize("newton.max_iter")?
        .unwrap_or(solver.newton_max_iter);
    solver.regularization = e.f64_or("regularization", solver.regularization)?;
    if let Some(seed) = e.take("seed") {
        solver.seed = seed.parse().map_err(|_| {
            parse_err(
                "seed",
                format!("expected an unsigned integer, got `{seed}`"),
            )
        })?;
    }
    if let Some(times) = e.take("output.times") {
        solver.output_times = times
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|t| t.is_finite() && *t >= 0.0)
                    .ok_or_else(|| parse_err("output.times", format!("invalid time `{s}`")))
            })
            .collect::<Result<_>>()?;
    }
    solver.drift = match e.take("drift").as_deref() {
        None | Some("centered") => Drift::Centered,
        Some("upwind") => Drift::Upwind,
        Some(other) => {
            return Err(parse_err(
                "drift",
                format!("expected centered or upwind, got `{other}`"),
            ))
        }
    };
    solver.initial = parse_initial(&mut e)?;
    // leftover init.* keys that the chosen preset does not use
    if let Some(k) = e.0.keys().find(|k| k.starts_with("init.")) {
        return Err(parse_err(k, "not used by the selected init.kind"));
    }
    for (key, v) in [
        ("dt", solver.dt),
        ("t_end", solver.t_end),
        ("newton.tol", solver.newton_tol),
    ] {
        if v <= 0.0 {
            return Err(parse_err(key, "must be positive"));
        }
    }
    if solver.regularization < 0.0 {
        return Err(parse_err("regularization", "must be nonnegative"));
    }

    let spec = RunSpec {
        coefficients,
        skt,
        sources,
        oracle_samples: e.usize("oracle.samples")?.unwrap_or(10_000),
        compare_levels: e.usize("compare.levels")?.unwrap_or(3),
        sweep_simulate: e.bool("sweep.simulate")?.unwrap_or(false),
        sweep_t_end: e.f64_or("sweep.t_end", 0.1)?,
        solver,
        sweep,
    };
    debug_assert!(e.0.is_empty(), "unconsumed keys {:?}", e.0.keys());
    Ok(spec)
}

pub fn load_spec(path: &Path) -> Result<RunSpec> {
    parse_spec(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_zero() {
        let s = parse_spec("").unwrap();
        assert_eq!(s.coefficients, CoefficientSet::zero());
        assert!(s.sources.is_none() && s.skt.is_none());
        assert_eq!(s.solver.grid.n_cells(), 64);
    }

    #[test]
    fn general_keys_and_comments() {
        let s = parse_spec(
            "# preset\nalpha.11 = 1\nalpha.22=1 # trailing\nbeta.12 = 0.5\n\ngamma.21 = 0.5\n",
        )
        .unwrap();
        assert_eq!(s.coefficients.alpha, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(s.coefficients.beta[0][1], 0.5);
        assert_eq!(s.coefficients.gamma[1][0], 0.5);
    }

    #[test]
    fn skt_keys_map_to_general() {
        let s = parse_spec(
            "skt.a10 = 1\nskt.a20 = 1.5\nskt.a11 = 1\nskt.a12 = 0.5\nskt.a21 = 1\nskt.a22 = 0.5",
        )
        .unwrap();
        let skt = s.skt.unwrap();
        assert_eq!(s.coefficients, skt.to_general());
    }

    #[test]
    fn errors_name_the_key() {
        let cases = [
            ("alpha.11 = one", "alpha.11"),
            ("alpha.13 = 1", "alpha.13"),
            ("alpha.11 = 1\nalpha.11 = 2", "alpha.11"),
            ("alpha.11 = 1\nskt.a10 = 1", "skt.a10"),
            ("b.11 = -1", "b.11"),
            ("grid.cells = 1", "grid.cells"),
            ("dt = 0", "dt"),
            ("init.kind = wave", "init.kind"),
            ("init.amplitude = 0.1", "init.amplitude"),
            ("sweep.beta.12 = 0:3", "sweep.beta.12"),
            ("sweep.alpha.12 = 0:1:3", "sweep.alpha.12"),
            ("drift = sideways", "drift"),
            ("nonsense", "nonsense"),
        ];
        for (text, key) in cases {
            match parse_spec(text) {
                Err(Error::Parse { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn solver_and_init_keys() {
        let s = parse_spec(
            "grid.cells = 32\ndt = 0.005\nt_end = 2\nseed = 9\noutput.times = 0.5, 1\ninit.kind = step\n\
             init.left.u1 = 0.5\ninit.left.u2 = 0.1\ninit.right.u1 = 0.1\ninit.right.u2 = 0.5\ndrift = upwind\n\
             b.10 = 0.25\nb.11 = 0.5\nb.12 = 0.25\nb.20 = 0.25\nb.21 = 0.25\nb.22 = 0.5",
        )
        .unwrap();
        assert_eq!(s.solver.grid.n_cells(), 32);
        assert_eq!(s.solver.dt, 0.005);
        assert_eq!(s.solver.seed, 9);
        assert_eq!(s.solver.output_times, vec![0.5, 1.0]);
        assert_eq!(s.solver.drift, Drift::Upwind);
        assert!(matches!(s.solver.initial, InitialData::Step { position, .. } if position == 0.5));
        assert_eq!(s.sources.unwrap().b[0], [0.25, 0.5, 0.25]);
    }

    #[test]
    fn sweep_axes() {
        let s = parse_spec("sweep.beta.12 = 0:3:31\nsweep.gamma.21 = 0.5:0.5:1").unwrap();
        let b = s.sweep.iter().find(|a| a.name == "beta.12").unwrap();
        assert_eq!(b.values.len(), 31);
        assert_eq!(b.values[0], 0.0);
        assert_eq!(b.values[30], 3.0);
        assert!((b.values[20] - 2.0).abs() < 1e-15);
    }
}
