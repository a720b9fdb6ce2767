use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Failed optimality or regularity checks are never errors: they are reported as data in the
/// various report types. Errors are reserved for malformed input and
/// unmet preconditions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite state at node {node}")]
    NonFiniteState { node: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("unknown lagrangian `{0}`")]
    UnknownLagrangian(String),
    #[error("unknown terminal cost `{0}`")]
    UnknownTerminalCost(String),
    #[error("need at least {needed} finite ordinates, found {found}")]
    TooFewFinitePoints { needed: usize, found: usize },
    #[error("dual grid is empty")]
    EmptyDualGrid,
    #[error("point {0} is outside the finite region of the sampled function")]
    PointOutsideFiniteRegion(f64),
    #[error("evaluator is infinite at the base point")]
    EvaluatorInfinite,
    #[error("direction fan is empty")]
    EmptyFan,
    #[error("endpoint {which} at distance {distance} outside the state grid")]
    EndpointOutsideGrid { which: &'static str, distance: f64 },
    #[error("every lattice path has infinite cost")]
    CostOverflow,
    #[error("reparametrization slope {slope} at node {node} is not above 1/2")]
    SlopeOutOfDomain { node: usize, slope: f64 },
    #[error("reparametrization slopes integrate to {got}, expected {expected}")]
    MassMismatch { expected: f64, got: f64 },
    #[error("hypothesis {condition} failed: {detail}")]
    HypothesisFailed { condition: String, detail: String },
    #[error("lagrangian flag `{0}` is required")]
    FlagMissing(&'static str),
    #[error("growth gauge too weak: {0}")]
    GaugeTooWeak(String),
    #[error("value layer {0} is identically +inf")]
    AllInfiniteLayer(usize),
    #[error("trajectory start {0} is not a lattice node")]
    TrajectoryOffGrid(f64),
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
