use thiserror::Error;

/// Errors raised by the library.
///
/// The split between validation and numeric-guard failures mirrors the CLI
/// exit codes (1 and 2 respectively).
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("aliasing: {0}")]
    Aliasing(String),
    #[error("resource guard: {0}")]
    ResourceGuard(String),
    #[error("numeric guard: {0}")]
    Numeric(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by numerical safety limits rather than bad input.
    pub fn is_numeric_guard(&self) -> bool {
        matches!(
            self,
            Error::Aliasing(_) | Error::ResourceGuard(_) | Error::Numeric(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => { $crate::error::Error::Invalid(format!($($arg)*)) };
}
pub(crate) use invalid;
