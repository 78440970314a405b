use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("quaternionic dimension must be positive")]
    ZeroDimension,

    #[error("(a, b, c) is not a unit triple: |a²+b²+c²−1| = {defect:e}")]
    NotUnit { defect: f64 },

    #[error("degree overflow: {left} + {right} exceeds real dimension {dim}")]
    DegreeOverflow { left: usize, right: usize, dim: usize },

    #[error("degree mismatch: expected {expected}, got {found}")]
    DegreeMismatch { expected: usize, found: usize },

    #[error("dimension mismatch: expected real dimension {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("form is not of type ({p},{q}) for the given structure")]
    WrongType { p: usize, q: usize },

    #[error("subspace is not invariant under the given complex structure (residual {residual:e})")]
    NotInvariant { residual: f64 },

    #[error("rank deficient: expected rank {expected}, found {found}")]
    RankDeficient { expected: usize, found: usize },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("operation needs a square root outside the scalar field: {0}")]
    NotRepresentable(String),

    #[error("internal consistency failure: {0}")]
    Inconsistent(String),

    #[error("no homogeneous polynomial of degree in {lo}..={hi} fits the samples (best residual {residual:e})")]
    NoPolynomialFit { lo: usize, hi: usize, residual: f64 },

    #[error("malformed input: {0}")]
    Format(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
