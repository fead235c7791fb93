use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Error kinds shared by every module. The CLI maps each kind onto a
/// distinct exit status.
#[derive(Debug, Error)]
pub enum Error {
    /// A state vector is not a valid encoding for the graph family.
    #[error("invalid state encoding: {0}")]
    Encoding(String),
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A non-finite value appeared in a numerical computation.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A file did not match its expected binary or text layout.
    #[error("format error: {0}")]
    Format(String),
    /// A configured memory or size budget was exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// Bad command-line or configuration input.
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Domain(_) | Error::Encoding(_) => 2,
            Error::Format(_) | Error::Io(_) => 3,
            Error::Resource(_) => 4,
            Error::Numeric(_) => 5,
        }
    }
}
