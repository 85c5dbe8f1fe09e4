//! One episode plus its hindsight benchmark and regret bound.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use adactl_core::hindsight::{Benchmark, BoundReport};
use adactl_core::scenario::gen_predictions;
use adactl_core::{
    run_episode, solve_benchmark, regret_bound, ControllerKind, EpisodeOptions, PredictionPolicy, PredictionStream, RunTrace,
    ScenarioSpec, RegretBound,
};

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::report::RegretReport;
use crate::trace::write_trace;

pub struct RunOutcome {
    pub trace: RunTrace,
    pub bound: Option<BoundReport>,
    pub report: RegretReport,
}

/// Predictions for the optimistic controller, when the scenario defines them.
pub fn predictions_for(kind: ControllerKind, spec: &ScenarioSpec, seed: u64) -> Result<Option<PredictionStream>> {
    if kind != ControllerKind::OptFtrlC || spec.predictions == PredictionPolicy::None {
        return Ok(None);
    }
    Ok(Some(gen_predictions(spec, &spec.true_gradients()?, seed)?))
}

/// Runs `cfg` against a precomputed benchmark for the same scenario.
pub fn execute_with(cfg: &RunConfig, benchmark: &Benchmark) -> Result<RunOutcome> {
    let preds = predictions_for(cfg.controller, &cfg.spec, cfg.seed)?;
    let opts = EpisodeOptions { sigma: cfg.sigma, record_iterates: false };
    let trace = run_episode(cfg.controller, &cfg.spec, preds.as_ref(), &opts)?;
    let hind = benchmark.against(trace.learner_cost());
    let bound = bound_for(&trace, hind.regret)?;
    let report = RegretReport::new(&cfg.spec.name, cfg.controller.name(), cfg.seed, &hind, bound.as_ref());
    Ok(RunOutcome { trace, bound, report })
}

pub fn execute(cfg: &RunConfig) -> Result<RunOutcome> {
    execute_with(cfg, &solve_benchmark(&cfg.spec)?)
}

/// The regret bound matching the trace's controller, if it has one.
pub fn bound_for(trace: &RunTrace, regret: f64) -> Result<Option<BoundReport>> {
    Ok(match RegretBound::for_controller(trace.controller) {
        Some(t) => Some(regret_bound(t, trace, &trace.constants, regret)?),
        None => None,
    })
}

/// Writes the trace CSV and the report JSON next to it (`<out>.json`).
pub fn write_outputs(out: &Path, spec: &ScenarioSpec, outcome: &RunOutcome, seed: u64) -> Result<()> {
    let io = |source: std::io::Error| HarnessError::Write { path: out.to_path_buf(), source };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let file = File::create(out).map_err(io)?;
    write_trace(BufWriter::new(file), spec, &outcome.trace, seed)?;
    let json_path = report_path(out);
    let text = serde_json::to_string_pretty(&outcome.report)? + "\n";
    std::fs::write(&json_path, text).map_err(|source| HarnessError::Write { path: json_path, source })?;
    Ok(())
}

pub fn report_path(out: &Path) -> std::path::PathBuf {
    out.with_extension("json")
}
