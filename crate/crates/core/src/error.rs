use thiserror::Error;

/// Errors raised by code construction, trellis building and decoding.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("word is not a codeword: first failing level {level}")]
    NotACodeword { level: usize },

    #[error("syndrome window of {needed} bits exceeds the 32-bit state word")]
    StateTooWide { needed: usize },

    #[error("kernel dimension {dim} exceeds the enumeration limit {limit}")]
    EnumerationLimit { dim: usize, limit: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
