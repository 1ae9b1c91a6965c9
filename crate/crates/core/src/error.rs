use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("element {index} is out of range for a ground set of size {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("point lies outside the constraint set (violation {violation:e})")]
    OutsideConstraint { violation: f64 },

    #[error("coordinate {index} = {value} lies outside [0, 1]")]
    OutsideUnitCube { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("ground set size {n} exceeds the enumeration cap {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no applicable inner maximization method: {0}")]
    NoInnerMethod(String),

    #[error("invalid seeds: {0}")]
    InvalidSeeds(String),

    #[error("region too small: {0}")]
    RegionTooSmall(String),

    #[error("shape leaves the frame at frame {frame}")]
    ShapeLeavesFrame { frame: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
