use thiserror::Error;

/// Errors raised by the numerical routines and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("series did not converge: {terms} terms used, last term norm {last_term_norm:e}")]
    NotConverged { terms: usize, last_term_norm: f64 },

    #[error("series diverges: spectral radius {radius} is not below 1")]
    Divergent { radius: f64 },

    #[error("iteration did not converge in {iterations} steps (residual {residual:e})")]
    MaxIterExceeded { iterations: usize, residual: f64 },

    #[error("empty input")]
    EmptyInput,

    #[error("invalid ensemble spec: {0}")]
    Spec(String),

    #[error("invalid experiment config: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
