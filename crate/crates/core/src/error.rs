use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The interior-point solver stopped without meeting its tolerances.
    #[error("solver failure after {iterations} iterations: {reason} (primal residual {primal_residual:.3e}, dual residual {dual_residual:.3e}, gap {gap:.3e})")]
    SolverFailure {
        reason: String,
        iterations: usize,
        primal_residual: f64,
        dual_residual: f64,
        gap: f64,
    },

    #[error("undefined estimate: {0}")]
    UndefinedEstimate(String),

    #[error("calibration failure: {0}")]
    CalibrationFailure(String),

    #[error("verdict unavailable: {0}")]
    VerdictUnavailable(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
