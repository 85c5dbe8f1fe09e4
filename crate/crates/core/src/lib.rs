//! Online non-stochastic control of linear time-invariant systems with
//! adaptive Follow-The-Regularized-Leader controllers over disturbance-action
//! policies.
//!
//! The crate is `no_std` (it needs `alloc`). Enable the `std` feature for
//! `std::error::Error` on [`Error`].

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod controller;
pub mod cost;
pub mod episode;
mod error;
pub mod hindsight;
pub mod linalg;
pub mod lti;
pub mod policy;
pub mod scenario;
pub mod schedule;

pub use controller::{BoundConstants, ControllerKind, ControllerState, UpdateInfo};
pub use cost::{CostSpec, SensitivityState};
pub use episode::{run_episode, EpisodeOptions, RunTrace, TraceRow};
pub use error::{Error, Result};
pub use hindsight::{solve_benchmark, regret_bound, BoundReport, HindsightResult, RegretBound};
pub use linalg::Matrix;
pub use lti::{DisturbanceWindow, StepRecord, SystemModel};
pub use policy::{FeasibleSet, GradientMatrix, PolicyParams};
pub use scenario::{builtin_scenario, PredictionPolicy, PredictionStream, ScenarioSpec, Segment};
pub use schedule::{ScheduleState, ScheduleVariant};
