//! Config-driven pipeline runs: stage orchestration, the run manifest and
//! plain-text/CSV reports built from recorded artifacts.

mod config;
mod manifest;
mod report;
mod run;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{
    AttackStage, DefendStage, EvalStage, ExperimentConfig, ExplainStage, FeaturizeStage, GenerateKind, GenerateStage,
    HawkesFitStage, HawkesStage, SplitStage, Stage, TrainStage,
};
pub use manifest::{sha256_hex, FileRecord, RunManifest, StageRecord, StageStatus, MANIFEST_FILE};
pub use report::{report, write_report, Report};
pub use run::run;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: String, message: String },
    #[error("integrity error: {path}: {message}")]
    Integrity { path: String, message: String },
    #[error("i/o error at {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl HarnessError {
    /// Process exit status: 2 for config, validation and integrity problems,
    /// 3 for failures while a stage runs or files are written.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Validation(_) | HarnessError::Integrity { .. } => 2,
            HarnessError::Stage { .. } | HarnessError::Io { .. } => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }
}
