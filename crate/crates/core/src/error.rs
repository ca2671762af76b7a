//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Register widths or state sizes outside the desk-scale guard rails.
    #[error("configuration: {0}")]
    Config(String),

    /// Caller violated an operation precondition (length mismatch, bad qubit
    /// positions, invalid argument combination).
    #[error("usage: {0}")]
    Usage(String),

    /// Malformed input data; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-finite input: {0}")]
    NonFinite(String),

    /// Correlation is undefined when either bit string is constant.
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("singular design: {0}")]
    SingularDesign(String),

    /// The requested accuracy drops every term of the digit series.
    #[error("empty error budget: eps_j0 = {eps_j0} >= 1 at requested eps = {eps}; lower eps")]
    EmptyBudget { eps: f64, eps_j0: f64 },

    #[error("unknown label: {0}")]
    UnknownLabel(String),

    #[error("no convergence after {iterations} iterations, gradient max-norm {grad_norm:e}")]
    NoConvergence { iterations: u32, grad_norm: f64 },

    /// Cost-model argument outside the formula's domain.
    #[error("domain: {0}")]
    Domain(String),
}
