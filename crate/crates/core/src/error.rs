use thiserror::Error;

/// Errors produced by the library.
///
/// Each variant maps onto a stable, machine-readable [`Error::code`] that the
/// command-line front end prints on failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite state at step {step}")]
    NonFinite { step: u64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "E_PARAMS",
            Error::InvalidInput(_) => "E_INPUT",
            Error::Config(_) => "E_CONFIG",
            Error::NonFinite { .. } => "E_NONFINITE",
            Error::Unsupported(_) => "E_UNSUPPORTED",
            Error::Parse { .. } => "E_PARSE",
            Error::Io(_) => "E_IO",
            Error::Json(_) => "E_JSON",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
