//! Regret reports.

use adactl_core::hindsight::{BoundReport, HindsightResult};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub scenario: String,
    pub controller: String,
    pub seed: u64,
    pub learner_cost: f64,
    pub benchmark_cost: f64,
    pub regret: f64,
    /// right-hand side of the matching regret bound; absent for baselines
    pub bound_rhs: Option<f64>,
    pub satisfied: Option<bool>,
}

impl RegretReport {
    pub fn new(scenario: &str, controller: &str, seed: u64, h: &HindsightResult, bound: Option<&BoundReport>) -> Self {
        RegretReport {
            scenario: scenario.to_string(),
            controller: controller.to_string(),
            seed,
            learner_cost: h.learner_cost,
            benchmark_cost: h.benchmark_cost,
            regret: h.regret,
            bound_rhs: bound.map(|b| b.rhs_value),
            satisfied: bound.map(|b| b.satisfied),
        }
    }
}
