use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("Gram matrices differ by {mismatch:e}; no isometry maps one family onto the other")]
    NotIsometric { mismatch: f64 },

    #[error("vector dimension {dim} exceeds target dimension {target}")]
    DimensionTooLarge { dim: usize, target: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("point lies outside the open polydisk")]
    OutsideDomain,

    #[error("interpolation problem is not solvable")]
    NotSolvable,

    #[error("certificate too loose to build an isometry (Gram mismatch {mismatch:e})")]
    CertificateTooLoose { mismatch: f64 },

    #[error("function is not inner: modulus deviates from 1 by {deviation:e} on the circle")]
    NotInner { deviation: f64 },

    #[error("matrix inner function is not pure: norm of value at 0 is {norm}")]
    NotPure { norm: f64 },

    #[error("numerically singular system: {0}")]
    Singular(String),

    #[error("degenerate construction: {0}")]
    Degenerate(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
