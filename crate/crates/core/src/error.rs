//! Error taxonomy shared across the library.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A box with zero width was fed to the aspect-ratio distance while its
    /// weight is nonzero.
    #[error("degenerate shape: {0}")]
    DegenerateShape(String),

    /// Relative parameters were requested against a parent with zero extent.
    #[error("degenerate parent: {0}")]
    DegenerateParent(String),

    /// The training loss became non-finite; the last good checkpoint is kept.
    #[error("training diverged: {0}")]
    TrainingDiverged(String),

    /// A serialized file does not match its documented schema.
    #[error("schema error at line {line}: {msg}")]
    Schema { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn schema(line: usize, msg: impl Into<String>) -> Self {
        Error::Schema {
            line,
            msg: msg.into(),
        }
    }
}
