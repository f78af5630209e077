use thiserror::Error;

use crate::integrator::StepReport;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for {len} grid points")]
    IndexOutOfRange { index: usize, len: usize },

    /// A spectral round trip left an imaginary part above tolerance. This
    /// signals a conjugation bug, not bad input.
    #[error("internal error: imaginary residue {max_imag:e} exceeds tolerance {tolerance:e}")]
    NonReal { max_imag: f64, tolerance: f64 },

    #[error("unsupported operand: {0}")]
    UnsupportedOperand(&'static str),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("resource limit: {what} requested for {points} points (limit {limit})")]
    ResourceLimit {
        what: &'static str,
        points: usize,
        limit: usize,
    },

    #[error("singular linear solve (condition estimate {condition:e})")]
    SingularSolve { condition: f64 },

    #[error("step failed at t = {t}: {reason} ({report})")]
    StepFailure {
        t: f64,
        reason: String,
        report: StepReport,
    },

    #[error("solution diverged at t = {t} (max norm {norm:e})")]
    Divergence { t: f64, norm: f64 },

    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics themselves (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonReal { .. }
                | Error::SingularSolve { .. }
                | Error::StepFailure { .. }
                | Error::Divergence { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
