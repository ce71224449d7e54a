use qsync_core::engine::EngineError;
use qsync_core::model::ModelError;
use qsync_core::observables::ObservableError;
use qsync_core::sync::SyncError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {path}: {reason}")]
    Config { path: String, reason: String },
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Config { path: path.into(), reason: reason.into() }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    /// Process exit status: 1 config, 2 solver, 3 failed check.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => 1,
            CliError::Solver(_) => 2,
            CliError::Check(_) => 3,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Invalid { path, reason } => Self::Config { path, reason },
            other => Self::Config { path: "spec".into(), reason: other.to_string() },
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        Self::Solver(e.to_string())
    }
}

impl From<SyncError> for CliError {
    fn from(e: SyncError) -> Self {
        Self::Solver(e.to_string())
    }
}

impl From<ObservableError> for CliError {
    fn from(e: ObservableError) -> Self {
        Self::Solver(e.to_string())
    }
}
