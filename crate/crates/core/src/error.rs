use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures raised by the matrix kernels and the dilation constructions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("columns are not orthonormal (max deviation {deviation:e})")]
    NotIsometry { deviation: f64 },
    #[error("unitary completion ran out of independent directions ({found} of {needed})")]
    RankDeficient { found: usize, needed: usize },
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("kraus rank {rank} outside 1..={max}")]
    BadRank { rank: usize, max: usize },
    #[error("map is not completely positive (weight {weight:e})")]
    NotCompletelyPositive { weight: f64 },
    #[error("map is not trace preserving (residual {residual:e})")]
    NotTracePreserving { residual: f64 },
    #[error("instrument is incomplete (defect {defect:e})")]
    Incomplete { defect: f64 },
    #[error(
        "instrument outcome probabilities can exceed one (defect eigenvalue {min_eigenvalue:e})"
    )]
    OverComplete { min_eigenvalue: f64 },
    #[error("invalid instrument: {0}")]
    InvalidInstrument(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NonFinite => "NonFinite",
            Error::NotHermitian { .. } => "NotHermitian",
            Error::NotPsd { .. } => "NotPSD",
            Error::NotIsometry { .. } => "NotIsometry",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::InvalidState(_) => "InvalidState",
            Error::BadRank { .. } => "BadRank",
            Error::NotCompletelyPositive { .. } => "NotCompletelyPositive",
            Error::NotTracePreserving { .. } => "NotTracePreserving",
            Error::Incomplete { .. } => "Incomplete",
            Error::OverComplete { .. } => "OverComplete",
            Error::InvalidInstrument(_) => "InvalidInstrument",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}
