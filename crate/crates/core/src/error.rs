use thiserror::Error;

/// Errors raised while building, validating or executing protocols.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller passed an argument outside the operation's contract.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A value failed a numerical or structural validity check.
    #[error("validation failed: {0}")]
    Validation(String),

    /// The global Hilbert-space dimension would exceed the configured cap.
    #[error("dimension {requested} exceeds the configured cap {cap}")]
    Capacity { requested: usize, cap: usize },

    /// A protocol step failed.
    #[error("step {index}: {source}")]
    Step {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    /// A protocol file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn at_step(self, index: usize) -> Self {
        match self {
            e @ Error::Step { .. } => e,
            e => Error::Step {
                index,
                source: Box::new(e),
            },
        }
    }

    /// True when the root cause is a dimension-cap violation.
    pub fn is_capacity(&self) -> bool {
        match self {
            Error::Capacity { .. } => true,
            Error::Step { source, .. } => source.is_capacity(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
