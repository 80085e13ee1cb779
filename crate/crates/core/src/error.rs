use thiserror::Error;

use crate::scalar::ScalarError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("subspace is not invariant under operator {index} raised to its power")]
    PreconditionNotInvariant { index: usize },
    #[error("step group is not dense in R^d")]
    NotDense,
    #[error("step group is dense; no hyperplane frame or coset slicing applies")]
    DenseGroup,
    #[error("differences are not simultaneous differences of one exponential polynomial")]
    Inconsistent,
    #[error("solution has a coefficient outside the exponential coefficient ring")]
    OutsideCoefficientRing,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("empty generator list")]
    EmptyGeneratorList,
    #[error("shift is not an integer combination of the grid steps")]
    ShiftNotOnGrid,
    #[error("period must be positive")]
    NonpositivePeriod,
    #[error("g does not vanish on the lattice hZ (|g({at})| = {value:e})")]
    LatticeValuesNonzero { at: f64, value: f64 },
    #[error("invalid hyperplane frame: {0}")]
    FrameInvalid(String),
    #[error("internal consistency failure: s(h)/r is not an integer")]
    NonIntegralRatio,
    #[error("least-squares fit is ill-conditioned (condition estimate {0:e})")]
    IllConditionedFit(f64),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
