use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitIndex { index: usize, num_qubits: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid Hilbert space: {0}")]
    InvalidSpace(String),

    #[error("empty subsystem selection")]
    EmptySelection,

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integration step {dt:e} s too large; retry with dt <= {suggested_dt:e} s")]
    StepTooLarge { dt: f64, suggested_dt: f64 },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("tomographically incomplete readout: {0}")]
    IncompleteReadout(String),

    #[error("rank-deficient design matrix: rank {rank} of {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("missing measurement record for rotation {0}")]
    MissingRecord(String),

    #[error("no dominant spectral peak")]
    NoDominantPeak,

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}
