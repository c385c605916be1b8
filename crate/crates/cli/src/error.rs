use std::path::PathBuf;

use thiserror::Error;

/// Failures of a harness command, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("numerical error: {0}")]
    Numerical(invlrr::Error),

    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.into(), message: err.to_string() }
    }

    /// 1 for usage, I/O and configuration problems; 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Config(_) => 1,
            CliError::Numerical(_) | CliError::Check(_) => 2,
        }
    }
}

impl From<invlrr::Error> for CliError {
    fn from(e: invlrr::Error) -> Self {
        match e {
            invlrr::Error::InvalidConfig(msg) => CliError::Config(msg),
            invlrr::Error::InvalidGrid(msg) => CliError::Config(format!("lambda_grid: {msg}")),
            invlrr::Error::MissingInput(what) => CliError::Config(format!("missing input: {what}")),
            other => CliError::Numerical(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
