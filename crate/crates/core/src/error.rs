use thiserror::Error;

/// Crate-wide error type. Messages carry a `module:` prefix so pipeline
/// failures point at the stage that produced them.
#[derive(Debug, Error)]
pub enum Error {
    /// Command-line or configuration misuse.
    #[error("usage: {0}")]
    Usage(String),
    /// A precondition on an operation argument was violated.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Input data is structurally malformed beyond record-level repair.
    #[error("malformed input: {0}")]
    Format(String),
    /// Two inputs that must agree do not.
    #[error("inconsistent data: {0}")]
    Consistency(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// Process exit code for the CLI: 2 usage, 3 input, 4 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Argument(_) | Error::Format(_) | Error::Consistency(_) | Error::Io(_) => 3,
            Error::Internal(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
