use thiserror::Error;

/// Errors raised by the estimation and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LevyError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature did not converge on [{a}, {b}]: estimate {estimate:e}, error {error:e}")]
    Integration {
        a: f64,
        b: f64,
        estimate: f64,
        error: f64,
    },
    #[error("not available: {0}")]
    NotAvailable(String),
    #[error("no increment exceeds the threshold {eps}")]
    EmptySample { eps: f64 },
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("non-finite value at x = {0}")]
    NonFinite(f64),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for LevyError {
    fn from(e: std::io::Error) -> Self {
        LevyError::Io(e.to_string())
    }
}

impl From<csv::Error> for LevyError {
    fn from(e: csv::Error) -> Self {
        LevyError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LevyError>;
