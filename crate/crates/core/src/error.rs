use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A computation could not produce a usable number.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Nonlinear least squares did not converge within its restart budget.
    #[error("least squares did not converge after {restarts} restarts (best objective {objective:e})")]
    NoConvergence {
        best: Vec<f64>,
        objective: f64,
        restarts: usize,
    },

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for errors caused by bad user input rather than numerics or I/O.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Invalid(_) | Error::Row { .. } | Error::Csv(_) | Error::Json(_))
    }
}
