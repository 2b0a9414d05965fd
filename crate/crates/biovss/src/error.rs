//! Crate-wide error type.

/// Errors produced by any operation in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two vectors (or a vector and a database) disagree on dimensionality.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Two binary codes (or a code and a filter) disagree on bit length.
    #[error("code length mismatch: expected {expected}, got {got}")]
    CodeLengthMismatch { expected: usize, got: usize },

    /// An input collection that must be nonempty was empty.
    #[error("empty {what}")]
    Empty { what: &'static str },

    /// A parameter was outside its valid range.
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// A direction was required but the vector has zero norm.
    #[error("zero-norm vector where a direction is required")]
    ZeroNormVector,

    /// A file could not be parsed; `offset` is the byte position of the fault.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    /// Stored data failed an integrity check (checksum, structural invariant).
    #[error("integrity check failed: {message}")]
    Integrity { message: String },

    /// A persisted file carries an unsupported format version.
    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }

    pub(crate) fn integrity(message: impl Into<String>) -> Self {
        Error::Integrity {
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
