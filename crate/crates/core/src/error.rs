use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("symbol value {value} out of range for k={k}")]
    SymbolOutOfRange { value: u64, k: u8 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("symbol width mismatch: k={left} vs k={right}")]
    WidthMismatch { left: u8, right: u8 },

    #[error("unknown id {0}")]
    UnknownId(u64),

    #[error("duplicate id {0}")]
    DuplicateId(u64),

    /// A store file or an edit script failed a consistency check.
    #[error("corrupted data: {0}")]
    Corrupted(String),

    /// A retrieved chunk did not match the original.
    #[error("verification failed for id {0}")]
    VerificationFailed(u64),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_corruption(&self) -> bool {
        matches!(self, Error::Corrupted(_))
    }
}
