use num_complex::Complex64;
use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("lattice is empty: the hole removed every site")]
    EmptyLattice,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("kappa must be positive and finite, got {0}")]
    InvalidKappa(f64),

    #[error("operation requires a {required} boundary")]
    WrongBoundary { required: &'static str },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian")]
    NotHermitian,

    #[error("operator must be diagonal: {0}")]
    NotDiagonal(&'static str),

    #[error("eigenvalue {eigenvalue} lies within {tolerance:e} of the branch cut (-inf, 0]")]
    BranchProximity { eigenvalue: Complex64, tolerance: f64 },

    #[error("eigenvalue within {tolerance:e} of 1/2: count is indeterminate")]
    IndeterminateCount { tolerance: f64 },

    #[error("trig polynomial triple residual {residual} exceeds {limit}")]
    TripleResidual { residual: f64, limit: f64 },

    #[error("invalid trig polynomial: {0}")]
    InvalidTriple(String),

    #[error("P is not an orthogonal projector (defect {0:e})")]
    NotProjector(f64),

    #[error("Z = X + iY is singular (site at the probe origin)")]
    SingularPosition,

    #[error("iterative gap solver did not converge (residual {residual:e} after {iterations} steps)")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
