use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller violated a precondition (bad dimension, out-of-range parameter, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// The objective produced a non-finite value.
    #[error("objective evaluated to {value} at x = {x:?}")]
    Evaluation { x: Vec<f64>, value: f64 },

    /// An iterative numerical routine failed to converge.
    #[error("numerical error: {message} (residual {residual:e})")]
    Numerical { message: String, residual: f64 },

    /// A derived quantity violated a bound that must hold by construction.
    #[error("internal consistency error: {0}")]
    Consistency(String),

    /// An iterate left the finite region or the divergence radius.
    #[error("iteration {iteration} diverged")]
    Divergence { iteration: usize, last_finite: Vec<f64> },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
