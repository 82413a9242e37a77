use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// `Resolution` and `Convergence` are numeric failures (the input was valid but
/// the method could not deliver a trustworthy value); the other variants are
/// caller errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Resolution(_) | Error::Convergence(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! domain {
    ($($arg:tt)*) => { $crate::error::Error::Domain(format!($($arg)*)) };
}
pub(crate) use domain;
