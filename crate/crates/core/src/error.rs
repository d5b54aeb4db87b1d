use thiserror::Error;

/// Errors raised by the reconstruction library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TomoError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("grid shape mismatch: expected {expected:?}, got {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("matrix is not Hermitian: max |A_ij - conj(A_ji)| = {asymmetry:e}")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix contains non-finite entries")]
    NonFiniteMatrix,

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal mass {residual:e})")]
    EigenNoConvergence { sweeps: usize, residual: f64 },

    #[error("spectral function undefined at eigenvalue {eigenvalue:e}")]
    SpectralDomain { eigenvalue: f64 },

    #[error("prior is not full rank: smallest eigenvalue {min_eigenvalue:e}")]
    PriorNotFullRank { min_eigenvalue: f64 },

    #[error("matrix is singular (smallest eigenvalue {min_eigenvalue:e}); the subdifferential is empty")]
    Singular { min_eigenvalue: f64 },

    #[error("exponent {exponent} exceeds the supported range (max 700)")]
    ExpOverflow { exponent: f64 },

    #[error("Bessel table with half-width {half_width} at x = {x} is truncated: sum of squares {sum:e}; use a larger half-width")]
    BesselTruncation { x: f64, half_width: usize, sum: f64 },

    #[error("non-finite input {0}")]
    NonFiniteInput(f64),

    #[error("PINEM truncation leaks probability: unitarity defect {defect:e}; use a larger Bessel half-width")]
    UnitarityDefect { defect: f64 },

    #[error("quadrature of order {order} is not self-consistent: doubling changed an entry by {change:e}")]
    QuadratureInconsistent { order: usize, change: f64 },

    #[error("KL gradient undefined: model value {model} at observation {observed}")]
    KlDomain { observed: f64, model: f64 },

    #[error("negative radicand {0:e} in the KL dual prox (corrupted data?)")]
    NegativeRadicand(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, TomoError>;
