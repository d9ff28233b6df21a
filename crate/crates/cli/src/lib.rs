//! Experiment harness for `qkt-core`: instance generators, property suites
//! and reproducible JSON/CSV reports.

pub mod config;
pub mod report;
pub mod suites;

pub use config::{ExperimentConfig, Geometry, Suite, SuiteRun};
pub use report::{expand, replay, run, InstanceFile, Report, SuiteReport};
pub use suites::{run_instance, Check, InstanceResult, InstanceSpec};

use serde::de::DeserializeOwned;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("schema error at {0}")]
    Schema(String),
    #[error(transparent)]
    Core(#[from] qkt_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Parses JSON, naming the offending field on failure.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Schema(format!("{path}: {}", e.into_inner()))
    })
}
