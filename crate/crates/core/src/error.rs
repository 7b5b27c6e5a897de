use thiserror::Error;

/// Errors produced anywhere in the lab.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("CNOT control and target must differ (both {0})")]
    SameControlTarget(usize),

    #[error("rotation gate requires an angle")]
    MissingAngle,

    #[error("CNOT does not take an angle")]
    UnexpectedAngle,

    #[error("amplitude vector length {0} is not a power of two")]
    BadAmplitudeLength(usize),

    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("backward called without a cached forward pass")]
    NoForwardCache,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
