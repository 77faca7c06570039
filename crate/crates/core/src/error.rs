use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "exact enumeration needs {count:.3e} hypotheses, budget is {budget:.0e}; use the MCMC posterior instead"
    )]
    EnumerationBudget { count: f64, budget: f64 },

    #[error("MCMC chains disagree: largest per-coordinate gap {gap:.4} exceeds tolerance {tolerance:.4}")]
    NotConverged { gap: f64, tolerance: f64 },

    #[error("snr target {target} is outside the curve's grid [0, {max}]")]
    OutsideGrid { target: f64, max: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
