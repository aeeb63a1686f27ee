//! Crate-wide error type.

use std::fmt;

/// Errors surfaced by model construction, sampling, and verification.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter violated a documented precondition.
    InvalidParameter(String),
    /// An input fell outside the mathematical domain of an operation.
    Domain(String),
    /// A partition function or moment does not exist for the requested state.
    Divergent(String),
    /// An estimate left the attainable range of the model (e.g. a sample mean
    /// outside the open range of the mean-energy curve).
    Saturated(String),
    /// Too few samples or replicas to evaluate the requested statistic.
    InsufficientData { needed: usize, got: usize, what: String },
    /// An iterative routine failed to converge within its budget.
    Convergence(String),
    /// A stochastic run tripped a numerical-quality guard and was rejected.
    NumericalFailure(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Divergent(msg) => write!(f, "divergent: {msg}"),
            Error::Saturated(msg) => write!(f, "saturated estimate: {msg}"),
            Error::InsufficientData { needed, got, what } => {
                write!(f, "insufficient data for {what}: needed {needed}, got {got}")
            }
            Error::Convergence(msg) => write!(f, "no convergence: {msg}"),
            Error::NumericalFailure(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
