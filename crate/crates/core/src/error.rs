use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or inconsistent model document; `path` names the offending field.
    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    /// `a·v` exceeded the exponent range of `f64` for some support vector.
    #[error("exponent overflow: a·v = {exponent} exceeds {limit} (rescale the tilt)")]
    Overflow { exponent: f64, limit: f64 },

    /// A model hypothesis required by the operation does not hold.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("linear program infeasible: {0}")]
    Infeasible(String),

    #[error("lattice ball needs {required} cells but the cap is {available}")]
    MemoryCap { required: usize, available: usize },

    #[error("no convergence: {0}")]
    NotConverged(String),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for failures of an iterative computation rather than bad input.
    pub fn is_computational(&self) -> bool {
        matches!(
            self,
            Error::NotConverged(_) | Error::MemoryCap { .. } | Error::Overflow { .. }
        )
    }
}
