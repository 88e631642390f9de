use thiserror::Error;

/// Errors raised by library operations.
///
/// Precondition violations are kept distinct from malformed input so the
/// command-line front end can map them to different exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HofaError {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("index arithmetic overflow: {0}")]
    Overflow(String),

    #[error("box of {cells} cells exceeds the dense limit of {limit}")]
    TooLarge { cells: u128, limit: u128 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl HofaError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        HofaError::Invalid(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        HofaError::Precondition(msg.into())
    }

    pub fn is_precondition(&self) -> bool {
        matches!(self, HofaError::Precondition(_))
    }
}

impl From<std::io::Error> for HofaError {
    fn from(e: std::io::Error) -> Self {
        HofaError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HofaError>;
