use std::path::{Path, PathBuf};

use pmsm_moo::error::{OptimizerError, SamplingError, SpecError, SurrogateError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    /// An artifact was produced for a different design space or KPI
    /// definition than the one being used.
    #[error("artifact mismatch: {0}")]
    Mismatch(String),
    #[error("{0}")]
    Feasibility(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Mismatch(_) => 2,
            CliError::Feasibility(_) => 3,
            CliError::Io { .. } | CliError::Format { .. } => 4,
            CliError::Internal(_) => 5,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(path: &Path, message: impl Into<String>) -> Self {
        CliError::Format {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SamplingError> for CliError {
    fn from(e: SamplingError) -> Self {
        match e {
            SamplingError::EmptyRequest => CliError::Config(e.to_string()),
            SamplingError::FeasibilityExhausted { .. } => CliError::Feasibility(e.to_string()),
        }
    }
}

impl From<SurrogateError> for CliError {
    fn from(e: SurrogateError) -> Self {
        match e {
            SurrogateError::TooFewSamples { .. } | SurrogateError::InvalidConfig(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<OptimizerError> for CliError {
    fn from(e: OptimizerError) -> Self {
        match e {
            OptimizerError::InvalidConfig(_) => CliError::Config(e.to_string()),
            OptimizerError::Sampling(s) => s.into(),
            OptimizerError::EvaluatorFailure { .. } => CliError::Internal(e.to_string()),
        }
    }
}
