use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// A player state machine was driven in a way its protocol forbids.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// The experiment config could not be parsed or validated.
    #[error("config error (line {line}, field `{field}`): {message}")]
    Config {
        line: usize,
        field: String,
        message: String,
    },

    /// Algorithm and problem variant do not belong together.
    #[error("algorithm `{algorithm}` cannot run on problem variant {variant}")]
    Pairing { algorithm: String, variant: String },

    /// A trace file is malformed.
    #[error("trace error (line {line}): {message}")]
    Trace { line: usize, message: String },

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn protocol(msg: impl Into<String>) -> Self {
        Error::Protocol(msg.into())
    }

    pub(crate) fn config(line: usize, field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            line,
            field: field.into(),
            message: msg.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
