use thiserror::Error;

/// Errors raised by the estimation pipeline and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid reading: {0}")]
    InvalidReading(String),

    #[error("degenerate position: zero-length vector has no direction")]
    DegeneratePosition,

    #[error("rays are parallel (|n1 x n2| = {cross_norm:e}); no unique nearest point")]
    ParallelRays { cross_norm: f64 },

    #[error("timestamps not strictly increasing at sample {index}")]
    Ordering { index: usize },

    #[error("insufficient data: {got} samples, need at least {need}")]
    InsufficientData { got: usize, need: usize },

    #[error(
        "gesture too short: net displacement {displacement_m:.4} m below floor {floor_m:.4} m"
    )]
    GestureTooShort { displacement_m: f64, floor_m: f64 },

    #[error("device coincides with trajectory sample {sample} ({distance_m:e} m)")]
    DegenerateGeometry { sample: usize, distance_m: f64 },

    #[error("catalog is empty")]
    EmptyCatalog,

    #[error("unknown device id {0:?}")]
    NotFound(String),

    #[error("duplicate device id {0:?}")]
    DuplicateId(String),

    #[error("sample {index} leaves the anchor field of view or minimum range")]
    OutOfFov { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
