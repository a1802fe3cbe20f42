use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not skew-Hermitian (max deviation {deviation:e})")]
    NotSkewHermitian { deviation: f64 },

    #[error("operator is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("operation requires at least one bath spin")]
    EmptyBath,

    #[error("operation requires equal couplings")]
    NotEqualCouplings,

    #[error("target is not contained in the closure (relative residual {residual:e})")]
    NotContained { residual: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("resource guard: {0}")]
    ResourceLimit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
