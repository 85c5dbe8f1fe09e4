//! Controllers × seeds on one scenario.

use std::io::Write;
use std::path::Path;

use adactl_core::{solve_benchmark, ControllerKind, ScenarioSpec};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::run::{execute_with, write_outputs};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub controller: ControllerKind,
    pub seed: u64,
    pub outcome: std::result::Result<SweepValues, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepValues {
    pub learner_cost: f64,
    pub regret: f64,
    pub bound_rhs: Option<f64>,
    pub satisfied: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    /// controllers by mean cost over their successful seeds, lowest first
    pub ranking: Vec<(ControllerKind, f64)>,
}

/// Runs every `(controller, seed)` pair in parallel. A failed run is kept as
/// a failed row. Traces go to `trace_dir` when given.
pub fn sweep(
    spec: &ScenarioSpec,
    controllers: &[ControllerKind],
    seeds: &[u64],
    sigma: Option<f64>,
    trace_dir: Option<&Path>,
) -> Result<SweepSummary> {
    let benchmark = solve_benchmark(spec)?;
    let jobs: Vec<(ControllerKind, u64)> =
        controllers.iter().flat_map(|&c| seeds.iter().map(move |&s| (c, s))).collect();
    let mut rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(controller, seed)| {
            let cfg = RunConfig { spec: spec.clone(), controller, seed, sigma };
            let outcome = execute_with(&cfg, &benchmark).and_then(|o| {
                if let Some(dir) = trace_dir {
                    let path = dir.join(format!("{}_{}_{seed}.csv", spec.name, controller));
                    write_outputs(&path, spec, &o, seed)?;
                }
                Ok(SweepValues {
                    learner_cost: o.report.learner_cost,
                    regret: o.report.regret,
                    bound_rhs: o.report.bound_rhs,
                    satisfied: o.report.satisfied,
                })
            });
            SweepRow { controller, seed, outcome: outcome.map_err(|e| e.to_string()) }
        })
        .collect();
    rows.sort_by(|a, b| a.controller.name().cmp(b.controller.name()).then(a.seed.cmp(&b.seed)));
    let mut ranking: Vec<(ControllerKind, f64)> = controllers
        .iter()
        .filter_map(|&c| {
            let costs: Vec<f64> = rows
                .iter()
                .filter(|r| r.controller == c)
                .filter_map(|r| r.outcome.as_ref().ok().map(|v| v.learner_cost))
                .collect();
            (!costs.is_empty()).then(|| (c, costs.iter().sum::<f64>() / costs.len() as f64))
        })
        .collect();
    ranking.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(SweepSummary { rows, ranking })
}

pub fn write_summary<W: Write>(out: W, summary: &SweepSummary) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["controller", "seed", "learner_cost", "regret", "bound_rhs", "satisfied", "status"])?;
    for r in &summary.rows {
        let rec = match &r.outcome {
            Ok(v) => vec![
                r.controller.name().to_string(),
                r.seed.to_string(),
                format!("{:?}", v.learner_cost),
                format!("{:?}", v.regret),
                v.bound_rhs.map(|b| format!("{b:?}")).unwrap_or_default(),
                v.satisfied.map(|s| s.to_string()).unwrap_or_default(),
                "ok".to_string(),
            ],
            Err(e) => vec![
                r.controller.name().to_string(),
                r.seed.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                format!("failed: {e}"),
            ],
        };
        w.write_record(&rec)?;
    }
    let mut out = w.into_inner().map_err(|e| HarnessError::Trace(e.into_error().into()))?;
    writeln!(out, "{}", ranking_line(summary)).map_err(|e| HarnessError::Trace(e.into()))?;
    Ok(())
}

pub fn ranking_line(summary: &SweepSummary) -> String {
    let parts: Vec<String> = summary.ranking.iter().map(|(c, v)| format!("{c} ({v:.1})")).collect();
    format!("# ranking: {}", parts.join(" < "))
}
