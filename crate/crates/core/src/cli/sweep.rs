use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admissibility::{admissibility_report, AdmissibilityReport, ReportOptions};
use crate::config::RunSpec;
use crate::model::{CoefficientSet, LotkaVolterra};
use crate::solver::run;

use super::RunSummary;

/// Sets the named coefficients and re-closes the symmetry relations.
///
/// Free parameters (`alpha.11`, `alpha.22`, `beta.11`, `beta.12`,
/// `gamma.22`) are applied first. A dependent entry is then reached by
/// moving one free parameter: `gamma.21` through `alpha.22`, `gamma.11`
/// through `gamma.22`, `beta.22` through `beta.11`.
pub fn apply_axes(
    base: &CoefficientSet,
    base_sources: Option<&LotkaVolterra>,
    values: &[(&str, f64)],
) -> (CoefficientSet, Option<LotkaVolterra>) {
    let mut p = base.free_parameters();
    let mut sources = base_sources.copied();
    for (name, v) in values {
        match *name {
            "alpha.11" => p.alpha11 = *v,
            "alpha.22" => p.alpha22 = *v,
            "beta.11" => p.beta11 = *v,
            "beta.12" => p.beta12 = *v,
            "gamma.22" => p.gamma22 = *v,
            _ => {}
        }
    }
    for (name, v) in values {
        match *name {
            "gamma.21" => p.alpha22 = v + p.alpha11 - p.beta12,
            "gamma.11" => p.gamma22 = v + p.beta12,
            "beta.22" => {
                let gamma21 = p.alpha22 - p.alpha11 + p.beta12;
                p.beta11 = v + gamma21;
            }
            b if b.starts_with("b.") => {
                let digits: Vec<usize> = b[2..].bytes().map(|c| (c - b'0') as usize).collect();
                let lv = sources.get_or_insert_with(LotkaVolterra::zero);
                lv.b[digits[0] - 1][digits[1]] = *v;
            }
            _ => {}
        }
    }
    (CoefficientSet::from_free(p), sources)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointRun {
    Completed(RunSummary),
    Skipped(String),
    Failed(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: Vec<usize>,
    pub values: BTreeMap<String, f64>,
    pub coefficients: CoefficientSet,
    pub report: AdmissibilityReport,
    pub run: Option<PointRun>,
}

/// Adjacent grid points (along one axis) where a verdict changes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub condition: String,
    pub axis: String,
    pub from: f64,
    pub to: f64,
    /// Zero of the binding margin by linear interpolation, when both ends
    /// have finite margins.
    pub estimate: Option<f64>,
    /// Values of the other axes.
    pub at: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub axes: Vec<String>,
    pub points: Vec<SweepPoint>,
    pub boundaries: Vec<Boundary>,
}

const TRACKED: [&str; 2] = ["existence", "large_time_abc"];

fn binding_margin(report: &AdmissibilityReport, condition: &str) -> Option<f64> {
    let prefix = format!("{condition}.");
    let m = report
        .margins
        .iter()
        .filter(|(k, _)| k.starts_with(&prefix))
        .map(|(_, v)| *v)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.min(v)))
        })?;
    m.is_finite().then_some(m)
}

fn index_of(flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut rest = flat;
    let mut idx = vec![0; shape.len()];
    for (k, n) in shape.iter().enumerate().rev() {
        idx[k] = rest % n;
        rest /= n;
    }
    idx
}

fn flat_of(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (i, n)| acc * n + i)
}

/// Evaluates every grid point of the sweep (in parallel on the current
/// rayon pool) and locates verdict flips. Failures are recorded per point.
pub fn run_sweep(spec: &RunSpec, force: bool) -> SweepReport {
    let axes: Vec<String> = spec.sweep.iter().map(|a| a.name.clone()).collect();
    let shape: Vec<usize> = spec.sweep.iter().map(|a| a.values.len()).collect();
    let total: usize = shape.iter().product();
    let points: Vec<SweepPoint> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let index = index_of(flat, &shape);
            let assigned: Vec<(&str, f64)> = spec
                .sweep
                .iter()
                .zip(&index)
                .map(|(a, i)| (a.name.as_str(), a.values[*i]))
                .collect();
            let (coefficients, sources) = if assigned.is_empty() {
                (spec.coefficients, spec.sources)
            } else {
                apply_axes(&spec.coefficients, spec.sources.as_ref(), &assigned)
            };
            let skt = if assigned.is_empty() { spec.skt } else { None };
            let report = admissibility_report(
                &coefficients,
                sources.as_ref(),
                skt.as_ref(),
                ReportOptions {
                    oracle_samples: spec.oracle_samples,
                    seed: spec.solver.seed,
                },
            );
            let run = spec.sweep_simulate.then(|| {
                if !report.verdict("existence") && !force {
                    return PointRun::Skipped("existence conditions fail".into());
                }
                let mut cfg = spec.solver.clone();
                cfg.coefficients = coefficients;
                cfg.sources = sources;
                cfg.t_end = spec.sweep_t_end;
                cfg.output_times.clear();
                match run(&cfg) {
                    Ok(out) => {
                        let recs = &out.series.records;
                        PointRun::Completed(RunSummary {
                            steps: recs.len() - 1,
                            halvings: out.halvings,
                            clipped: out.series.total_clipped(),
                            max_entropy_increase: (recs.len() > 1)
                                .then(|| out.series.max_entropy_increase()),
                            max_phi_increase: (out.steady.is_some() && recs.len() > 1)
                                .then(|| out.series.max_phi_increase()),
                            max_bound_violation: 0.0,
                            min_component: out.final_state.min_component(),
                            final_l2_to_steady: out.final_l2_to_steady(),
                            max_xi: None,
                            max_h_minus1: None,
                        })
                    }
                    Err(e) => PointRun::Failed(e.to_string()),
                }
            });
            let values = assigned.iter().map(|(k, v)| (k.to_string(), *v)).collect();
            SweepPoint {
                index,
                values,
                coefficients,
                report,
                run,
            }
        })
        .collect();

    let mut boundaries = Vec::new();
    for (flat, p) in points.iter().enumerate() {
        for (k, axis) in spec.sweep.iter().enumerate() {
            if p.index[k] + 1 >= shape[k] {
                continue;
            }
            let mut next = p.index.clone();
            next[k] += 1;
            let q = &points[flat_of(&next, &shape)];
            debug_assert_eq!(flat_of(&p.index, &shape), flat);
            for cond in TRACKED {
                if p.report.verdict(cond) == q.report.verdict(cond) {
                    continue;
                }
                let (a, b) = (axis.values[p.index[k]], axis.values[next[k]]);
                let estimate = match (
                    binding_margin(&p.report, cond),
                    binding_margin(&q.report, cond),
                ) {
                    (Some(ma), Some(mb)) if ma != mb => Some(a + (b - a) * ma / (ma - mb)),
                    _ => None,
                };
                let at = p
                    .values
                    .iter()
                    .filter(|(name, _)| **name != axis.name)
                    .map(|(n, v)| (n.clone(), *v))
                    .collect();
                boundaries.push(Boundary {
                    condition: cond.to_string(),
                    axis: axis.name.clone(),
                    from: a,
                    to: b,
                    estimate,
                    at,
                });
            }
        }
    }
    SweepReport {
        axes,
        points,
        boundaries,
    }
}
