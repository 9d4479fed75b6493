use thiserror::Error;

/// Errors raised by the library.
///
/// Protocol rejections are not errors; they are reported through
/// [`AuthResult`](crate::protocol::AuthResult) and the tag's failure path.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("bit length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("cannot split a bit string of odd length {0}")]
    OddLength(usize),

    #[error("expected {expected} bits, got {actual}")]
    WrongLength { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("protocol order violated: {0}")]
    ProtocolOrder(&'static str),

    #[error("malformed encoding: {0}")]
    Malformed(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0} budget exhausted")]
    BudgetExceeded(&'static str),

    #[error("Test may be called only once")]
    DoubleTest,

    #[error("distinguisher never called Test")]
    TestNotCalled,

    #[error("oracle misuse: {0}")]
    Misuse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
