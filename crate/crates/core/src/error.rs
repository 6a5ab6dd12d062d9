use thiserror::Error;

/// Errors raised by the simulator and the closed-form calculators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum StegoError {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid Pauli symbol {0:?}")]
    InvalidSymbol(char),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not a density matrix: {0}")]
    NotADensityMatrix(String),

    #[error("key exhausted: requested {requested} bits with {remaining} remaining")]
    KeyExhausted { requested: usize, remaining: usize },

    #[error("invalid key material: {0}")]
    InvalidKey(String),

    #[error("empty typical window: {0}")]
    EmptyWindow(String),

    #[error("infeasible construction: {0}")]
    Infeasible(String),

    #[error("message index out of range: {0}")]
    MessageOutOfRange(String),

    #[error("decode failure: {0}")]
    DecodeFailure(String),

    #[error("unsupported channel for this operation: {0}")]
    UnsupportedChannel(String),
}

pub type Result<T> = std::result::Result<T, StegoError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(StegoError::InvalidParameter(msg.into()))
}
