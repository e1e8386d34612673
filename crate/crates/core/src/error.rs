use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("gate targets must be distinct, got {0:?}")]
    DuplicateTargets(Vec<usize>),

    #[error("symbolic parameter {0} is unbound")]
    UnboundParameter(usize),

    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },

    #[error("gate `{0}` is not a Pauli rotation; parameter shift does not apply")]
    NonPauliRotation(&'static str),

    #[error("shots must be at least 1")]
    ZeroShots,

    #[error("{what} is limited to {max} qubits, got {actual}")]
    TooManyQubits {
        what: &'static str,
        max: usize,
        actual: usize,
    },

    #[error("block size {block} does not divide {num_qubits} qubits")]
    IndivisibleBlocks { block: usize, num_qubits: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("circuit parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema mismatch in {path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("checksum mismatch in {path}")]
    Checksum { path: PathBuf },

    #[error("optimization did not reach its target: {0}")]
    NotConverged(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
