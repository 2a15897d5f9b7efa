use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the documented domain of the operation.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The lattice is too coarse to resolve the requested object.
    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    /// A documented precondition of the caller was not met.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Something that must hold by construction did not. Always a fault.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
