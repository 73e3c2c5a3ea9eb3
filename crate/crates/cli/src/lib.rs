//! Pipeline orchestration for webshop identification and turnover
//! estimation: data ingestion, synthetic-data generation, labeled-sample
//! selection, end-to-end runs, privacy-suppressed histogram export and
//! reports.

pub mod config;
pub mod features_io;
pub mod fetch;
pub mod histogram;
pub mod sample;
pub mod schema;
pub mod stages;
pub mod synth;

use thiserror::Error;

/// Top-level error, mapped onto process exit codes: data errors exit 1,
/// configuration errors 2, convergence failures 3.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Convergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => 1,
            CliError::Config(_) => 2,
            CliError::Convergence(_) => 3,
        }
    }

    /// Prefixes the failing stage name, preserving the error class.
    pub fn in_stage(self, stage: &str) -> CliError {
        match self {
            CliError::Data(m) => CliError::Data(format!("stage {stage}: {m}")),
            CliError::Config(m) => CliError::Config(format!("stage {stage}: {m}")),
            CliError::Convergence(m) => CliError::Convergence(format!("stage {stage}: {m}")),
        }
    }
}
