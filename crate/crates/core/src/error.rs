use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid point count {0} must be a power of two and at least 8")]
    BadPointCount(usize),
    #[error("domain length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("expected a {expected:?}-side field, got {found:?}")]
    SideMismatch {
        expected: crate::grid::Side,
        found: crate::grid::Side,
    },
    #[error("expected {expected} samples, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("field has zero norm")]
    ZeroField,
    #[error("kernel argument |a| = {0} is inside the near-singular band")]
    NearSingular(f64),
    #[error("exponential weight exceeds exp(700) on the support of the first slot")]
    WeightOverflow,
    #[error("first slot must be compactly supported when eps = 0")]
    NotCompactlySupported,
    #[error("only {0} usable samples, need at least {1}")]
    TooFewPoints(usize, usize),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("iteration collapsed to the zero field")]
    Collapse,
    #[error("integration unstable: norm grew by factor {0}")]
    Unstable(f64),
    #[error("lattice index out of range")]
    OffLattice,
}
