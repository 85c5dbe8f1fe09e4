//! Executable property suites behind `adactl verify`.

mod oracles;
mod suites;

use std::time::{Duration, Instant};

use adactl_core::{FeasibleSet, PolicyParams};
use rayon::prelude::*;
use serde::Serialize;

pub use oracles::{bisection_project, naive_replay};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Fast,
    Full,
}

pub type ProjectFn = fn(&PolicyParams, &FeasibleSet) -> PolicyParams;

#[derive(Clone, Copy)]
pub struct VerifyContext {
    pub level: Level,
    /// projection under test
    pub project: ProjectFn,
    pub seed: u64,
}

impl VerifyContext {
    pub fn new(level: Level) -> Self {
        VerifyContext { level, project: adactl_core::policy::project, seed: 0x5eed }
    }

    fn full(&self) -> bool {
        self.level == Level::Full
    }
}

/// Counts checks and keeps the first few failure messages.
#[derive(Default)]
pub(crate) struct Tally {
    checks: usize,
    failed: usize,
    messages: Vec<String>,
}

impl Tally {
    pub(crate) fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failed += 1;
            if self.messages.len() < 5 {
                self.messages.push(msg());
            }
        }
    }

    pub(crate) fn error(&mut self, e: impl std::fmt::Display) {
        self.check(false, || e.to_string());
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub checks: usize,
    pub failed: usize,
    pub failures: Vec<String>,
    #[serde(serialize_with = "ser_secs")]
    pub elapsed: Duration,
}

fn ser_secs<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

type SuiteFn = fn(&VerifyContext, &mut Tally);

pub fn suite_names() -> Vec<&'static str> {
    suites::ALL.iter().map(|(n, _)| *n).collect()
}

fn run_one(ctx: &VerifyContext, name: &'static str, f: SuiteFn) -> SuiteResult {
    let start = Instant::now();
    let mut tally = Tally::default();
    f(ctx, &mut tally);
    if tally.checks == 0 {
        tally.error("suite performed no checks");
    }
    SuiteResult {
        name,
        passed: tally.failed == 0,
        checks: tally.checks,
        failed: tally.failed,
        failures: tally.messages,
        elapsed: start.elapsed(),
    }
}

/// Runs every suite, or only those named in `only`. Results keep the suite order.
pub fn run_suites(ctx: &VerifyContext, only: Option<&[String]>) -> Vec<SuiteResult> {
    suites::ALL
        .par_iter()
        .filter(|(n, _)| only.is_none_or(|o| o.iter().any(|s| s == n)))
        .map(|&(name, f)| run_one(ctx, name, f))
        .collect()
}

/// The names of failed suites, as JSON.
pub fn failure_list(results: &[SuiteResult]) -> String {
    let failed: Vec<&SuiteResult> = results.iter().filter(|r| !r.passed).collect();
    serde_json::to_string(&failed).unwrap_or_else(|_| "[]".into())
}
