//! Scenario files, traces, regret reports, sweeps and verification suites
//! around `adactl-core`.

pub mod bench;
pub mod config;
pub mod error;
pub mod report;
pub mod run;
pub mod sweep;
pub mod trace;
pub mod verify;

pub use error::{HarnessError, Result};
