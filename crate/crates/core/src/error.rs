use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported dimension n = {0} (supported: 1..={max})", max = crate::tensor::MAX_DIM)]
    UnsupportedDimension(usize),

    #[error("expected {expected} entries, found {found}")]
    EntryCount { expected: usize, found: usize },

    #[error("non-finite value encountered")]
    NonFinite,

    #[error("index base must be 0 or 1, found {0}")]
    IndexBase(u32),

    #[error("malformed tuple: {0}")]
    MalformedTuple(String),

    #[error("not a permutation of {{1,2,3,4}}: {0:?}")]
    InvalidPermutation([usize; 4]),

    #[error("matrix is not skew-symmetric (residual {residual:e})")]
    NotSkew { residual: f64 },

    #[error("tensor is not in V3 (constraint residual {residual:e})")]
    NotInV3 { residual: f64 },

    #[error("basis is rank deficient: rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("reconstruction residual {residual:e} exceeds tolerance {tol:e}")]
    Reconstruction { residual: f64, tol: f64 },

    #[error("field validation failed: {0}")]
    FieldValidation(String),

    #[error("noninteraction condition violated at t = {t}: {detail}")]
    Noninteraction { t: f64, detail: String },

    #[error("non-finite state after t = {last_valid_time}")]
    NonFiniteState { last_valid_time: f64 },

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid system spec: {0}")]
    SystemSpec(String),

    #[error("invalid trajectory data: {0}")]
    Trajectory(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
