use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input: wrong composition sum, bad probability vector, etc.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("state space too large: {size} states exceeds the cap of {cap}")]
    StateSpaceTooLarge { size: String, cap: u64 },

    /// A numeric argument outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("ordering violation: {0}")]
    Ordering(String),

    #[error("mutation matrix fails the monotonicity conditions: {0}")]
    ConditionsFail(String),

    #[error("Perron iteration failed after {iterations} iterations")]
    PerronFailed { iterations: usize },

    #[error("crude bound unavailable: {0}")]
    CrudeUnavailable(String),

    #[error("non-convergence: {0}")]
    NonConvergence(String),

    /// An identity that must hold by construction was violated numerically.
    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures caused by limits of the engine rather than bad input.
    pub fn is_capability(&self) -> bool {
        matches!(
            self,
            Error::StateSpaceTooLarge { .. }
                | Error::CrudeUnavailable(_)
                | Error::NonConvergence(_)
                | Error::Consistency(_)
                | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
