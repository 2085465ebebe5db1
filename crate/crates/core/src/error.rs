use thiserror::Error;

/// Library-wide error type.
///
/// The three variants map onto the three distinct CLI exit codes: bad input
/// values, bad run configuration, and numerical breakdown during a solve.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Inconsistent run configuration (mesh vs breakpoints, ranges, ...).
    #[error("configuration error: {0}")]
    Config(String),
    /// A solve produced a non-finite or inconsistent intermediate value.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
