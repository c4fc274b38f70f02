use thiserror::Error;

/// Errors reported by the walk, spectral, and fitting operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the inputs was violated (sizes, ranges, modes).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A numerical routine did not meet its accuracy or convergence target.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn numerical(msg: impl Into<String>) -> Error {
    Error::NumericalFailure(msg.into())
}
