//! Wall-clock throughput of the controllers.

use std::time::{Duration, Instant};

use adactl_core::{run_episode, ControllerKind, EpisodeOptions, ScenarioSpec};

use crate::error::Result;
use crate::run::predictions_for;

#[derive(Clone, Debug)]
pub struct BenchResult {
    pub controller: ControllerKind,
    pub steps: usize,
    pub repeats: usize,
    pub best: Duration,
    pub mean: Duration,
}

impl BenchResult {
    /// Steps per second of the fastest repeat.
    pub fn steps_per_sec(&self) -> f64 {
        self.steps as f64 / self.best.as_secs_f64().max(1e-12)
    }
}

/// Times full episodes, sequentially so runs do not compete for cores.
pub fn bench(spec: &ScenarioSpec, controllers: &[ControllerKind], repeats: usize) -> Result<Vec<BenchResult>> {
    let repeats = repeats.max(1);
    let opts = EpisodeOptions::default();
    let mut out = Vec::with_capacity(controllers.len());
    for &kind in controllers {
        let preds = predictions_for(kind, spec, 0)?;
        let mut times = Vec::with_capacity(repeats);
        for _ in 0..repeats {
            let start = Instant::now();
            let trace = run_episode(kind, spec, preds.as_ref(), &opts)?;
            times.push(start.elapsed());
            std::hint::black_box(trace.learner_cost());
        }
        let best = times.iter().copied().min().unwrap_or_default();
        let mean = times.iter().sum::<Duration>() / repeats as u32;
        out.push(BenchResult { controller: kind, steps: spec.horizon, repeats, best, mean });
    }
    Ok(out)
}
