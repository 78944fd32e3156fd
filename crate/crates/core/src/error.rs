use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the toolkit. Every variant maps to a stable category name
/// (see [`Error::category`]) so drivers can translate them to exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Endpoints cannot be joined by a walk of the requested length.
    #[error("invalid endpoint pair: {0}")]
    InvalidEndpoint(String),

    /// Argument outside the mathematical domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// Request exceeds a documented computational budget.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A required table entry is missing.
    #[error("incomplete input: {0}")]
    IncompleteInput(String),
}

impl Error {
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidEndpoint(_) => "invalid-endpoint",
            Error::Domain(_) => "domain",
            Error::Capacity(_) => "capacity",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::IncompleteInput(_) => "incomplete-input",
        }
    }
}
