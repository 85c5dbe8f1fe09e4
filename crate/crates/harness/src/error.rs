use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read {path}: {source}")]
    ReadConfig { path: PathBuf, source: std::io::Error },
    #[error("malformed scenario file: {0}")]
    ParseConfig(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Run(#[from] adactl_core::Error),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("trace: {0}")]
    Trace(#[from] csv::Error),
    #[error("verification failed: {}", .0.join(", "))]
    Verify(Vec<String>),
}

impl HarnessError {
    /// 1 config, 2 run, 3 verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::ReadConfig { .. } | HarnessError::ParseConfig(_) | HarnessError::Config(_) => 1,
            HarnessError::Run(_) | HarnessError::Write { .. } | HarnessError::Trace(_) => 2,
            HarnessError::Verify(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
