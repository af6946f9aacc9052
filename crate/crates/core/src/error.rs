use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("modulus polynomial is zero")]
    ZeroModulus,
    #[error("polynomial {0:#o} has no constant term or degree 0")]
    NoCycle(u32),
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("state {state} out of range for memory {memory}")]
    StateOutOfRange { state: usize, memory: u32 },
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("interleaver construction failed: {0}")]
    ConstructionFailed(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("search budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
