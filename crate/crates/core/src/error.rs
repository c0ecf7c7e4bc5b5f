use nalgebra::DVector;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point set is empty")]
    EmptyPointSet,

    #[error("rotation is not orthonormal (deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("degenerate body: total mass is zero")]
    DegenerateBody,

    #[error("expected {expected} joint angles, got {got}")]
    JointCountMismatch { expected: usize, got: usize },

    #[error("timestamps are not uniformly spaced (sample {index})")]
    NonUniformTimestamps { index: usize },

    #[error("shape has zero volume")]
    ZeroVolume,

    #[error("no estimate available: {0}")]
    NoEstimate(String),

    #[error("solver hit its iteration cap after {iterations} iterations")]
    IterationCap {
        iterations: usize,
        best: DVector<f64>,
    },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
