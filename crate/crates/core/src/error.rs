use thiserror::Error;

/// Crate-wide error type. The CLI maps `Parse`/`Precondition`/`Structure`
/// to exit code 2 and `Consistency` to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("structural error in matching of element {owner}: {reason}")]
    Structure { owner: usize, reason: String },

    #[error("field mismatch: {0}")]
    FieldMismatch(String),

    #[error("numerical conditioning failure: {0}")]
    Conditioning(String),

    #[error("certification failure: {0}")]
    Certification(String),

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
