use thiserror::Error;

/// Errors raised by the simulator, model and training code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value is outside its admissible range.
    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: &'static str, reason: String },

    /// An argument does not fit the object it is applied to (bad qubit
    /// index, length mismatch, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// A value left the numeric domain of an operation (non-finite input,
    /// log of zero, ...).
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn config(key: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            key,
            reason: reason.into(),
        }
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
