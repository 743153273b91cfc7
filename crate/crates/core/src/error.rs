use crate::fieldexpr::FieldError;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("metric is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("dimension {0} is not supported")]
    UnsupportedDimension(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("configuration is not rotationally symmetric: {0}")]
    NotRotationallySymmetric(String),
    #[error("ladder fit failed: {0}")]
    FitFailure(String),
    #[error("bulk tail does not decay: {0}")]
    TailDivergence(String),
    #[error("theorem hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("degenerate boundary: {0}")]
    DegenerateBoundary(String),
}

pub type Result<T> = std::result::Result<T, Error>;
