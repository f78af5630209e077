use thiserror::Error;

use epdiff_core::{ConfigError, Error};

/// Command failures, grouped by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or arguments (exit 1).
    #[error("{0}")]
    Validation(String),
    /// Solver non-convergence, blow-up or failed checks (exit 2).
    #[error("{0}")]
    Numerical(String),
    /// Filesystem or serialization failure (exit 3).
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Json(_) => CliError::Io(e.to_string()),
            ref n if n.is_numerical() => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
