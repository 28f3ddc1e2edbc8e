use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AfdmError {
    #[error("N_p must be even (got {0})")]
    OddPeriod(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("operation requires the proposed preset (c1 = 1/(2 N_p), c2 = 0)")]
    RequiresProposed,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("cyclic prefix state mismatch: {0}")]
    CppState(&'static str),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error("map of {rows}x{cols} is smaller than the {window}x{window} detection window")]
    MapTooSmall {
        rows: usize,
        cols: usize,
        window: usize,
    },

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("linear system is singular: {0}")]
    Singular(String),

    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, AfdmError>;

impl From<std::io::Error> for AfdmError {
    fn from(e: std::io::Error) -> Self {
        AfdmError::Io(e.to_string())
    }
}
