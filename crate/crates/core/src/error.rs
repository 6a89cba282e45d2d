use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("not integrable: {0}")]
    NotIntegrable(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("implicit step failed to converge at node {node}")]
    Convergence { node: usize },
    #[error("series diverges: critical exponent {critical}, got {exponent}")]
    Divergent { exponent: f64, critical: f64 },
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),
    #[error("invalid input: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("quadrature did not reach tolerance: estimate {estimate}, error {error}")]
    Quadrature { estimate: f64, error: f64 },
    #[error("non-finite state at node {node} of path {path}")]
    NonFinite { path: u64, node: usize },
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
