use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("{name} = {value} is outside its valid domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("transmitter and receiver occupy the same position")]
    CoincidentPositions,

    #[error("unsupported constellation size {0} (expected 8, 16 or 32)")]
    UnsupportedOrder(usize),

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("power allocation violates the {condition} condition: {detail}")]
    SicCondition {
        condition: &'static str,
        detail: String,
    },

    #[error("empty luminaire list")]
    NoLuminaires,

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
