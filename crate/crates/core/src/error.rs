use thiserror::Error;

/// Failure modes shared by every module of the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A named object (map, mode, format) was not recognised.
    #[error("configuration error: {0}")]
    Config(String),
    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The operation is not available for this input (e.g. exact cell
    /// geometry for a map without an affine description).
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    /// The request exceeds a fixed resource cap.
    #[error("resource limit: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
