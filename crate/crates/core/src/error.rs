use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is rank deficient (column {column}, pivot {pivot:e})")]
    RankDeficient { column: usize, pivot: f64 },

    #[error("diagonal entry {index} is singular ({magnitude:e})")]
    SingularDiagonal { index: usize, magnitude: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("invalid Zadoff-Chu root {root} for length {length}")]
    InvalidRoot { root: usize, length: usize },

    #[error("no synchronization peak above threshold (best metric {best_metric:.4})")]
    NoPeak { best_metric: f64 },

    #[error("zero DL pilot estimate for user {user}")]
    ZeroPilot { user: usize },

    #[error("CSI trace needs {required} bytes but buffer holds {capacity}")]
    BufferOverrun { required: u64, capacity: u64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("schedule has no UL pilot followed by a DL symbol")]
    NoTurnaround,

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed CSI trace: {0}")]
    MalformedTrace(String),
}

impl Error {
    pub(crate) fn dims(expected: impl Into<String>, actual: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            expected: expected.into(),
            actual: actual.into(),
        }
    }
}
