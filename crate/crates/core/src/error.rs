use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension {0} outside the supported range 2..=8")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("vector norm {0} is not 1")]
    NotUnit(f64),
    #[error("degenerate container")]
    DegenerateContainer,
    #[error("ray origin lies outside the container")]
    OriginOutside,
    #[error("point is not on the container boundary (distance {0:e})")]
    NotOnBoundary(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObstacleError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid core shape: {0}")]
    InvalidShape(&'static str),
    #[error("tube radius {epsilon} must lie in (0, {reach}) (below the reach of the core)")]
    BeyondReach { epsilon: f64, reach: f64 },
    #[error("point lies on the core, the distance gradient is singular there")]
    CoreSingularity,
    #[error("sphere tracing exhausted {0} marching steps")]
    StepLimitExceeded(usize),
    #[error("bubble centres do not cover the core: max distance {max_distance} exceeds {epsilon}")]
    CoverageFailure { max_distance: f64, epsilon: f64 },
    #[error("bubble tube needs at least one centre")]
    NoCenters,
    #[error("bubble centres {0} and {1} coincide")]
    CoincidentCenters(usize, usize),
    #[error("{0} centres cannot form a square product grid")]
    InvalidCenterCount(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BilliardError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Obstacle(#[from] ObstacleError),
    #[error("start point must point strictly into the container")]
    InvalidStart,
    #[error("tube is not strictly inside the container (clearance {clearance}, radius {epsilon})")]
    Clearance { clearance: f64, epsilon: f64 },
    #[error("scattering scenes need core dimension k <= n - 2 (k = {k}, n = {n})")]
    Codimension { k: usize, n: usize },
    #[error("trajectory did not exit; it cannot be reversed")]
    NotExited,
    #[error("direction drifted off the unit sphere (|v| - 1 = {0:e})")]
    SpeedDrift(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error(transparent)]
    Billiard(#[from] BilliardError),
    #[error("every one of the {0} samples was trapped or corner-terminated")]
    AllTrapped(u64),
    #[error("sample count must be positive")]
    NoSamples,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecoveryError {
    #[error("interpolation nodes are not distinct")]
    DuplicateNodes,
    #[error("{nodes} nodes but {values} values")]
    LengthMismatch { nodes: usize, values: usize },
    #[error("need at least {needed} layers, got {got}")]
    InsufficientLayers { needed: usize, got: usize },
    #[error("layer epsilons must be strictly decreasing and positive")]
    UnorderedLadder,
    #[error("roughness correction must lie in (0, 1], got {0}")]
    InvalidRhoHat(f64),
    #[error("expected {expected} coefficients, got {got}")]
    CoefficientCount { expected: usize, got: usize },
}
