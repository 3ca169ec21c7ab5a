use thiserror::Error;

/// Errors raised by the geometry kernels and the campaign harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("spectrum must contain at least one block")]
    EmptySpectrum,
    #[error("eigenvalues must be strictly increasing (block {index}: {prev} >= {next})")]
    NonIncreasingEigenvalues { index: usize, prev: f64, next: f64 },
    #[error("eigenvalue of block {index} must be positive, got {alpha}")]
    NonPositiveEigenvalue { index: usize, alpha: f64 },
    #[error("block {index} has zero dimension")]
    ZeroDimensionBlock { index: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operation needs at least two blocks")]
    SingleBlockSpectrum,
    #[error("operation needs a single-block spectrum")]
    MultiBlockSpectrum,
    #[error("points coincide")]
    IdenticalPoints,
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("polyline needs at least two vertices")]
    TooFewVertices,
    #[error("integrator step size underflow at s = {at}")]
    StepSizeUnderflow { at: f64 },
    #[error("initial velocity must have unit Riemannian norm (got {0})")]
    InvalidVelocity(f64),
    #[error("{what} did not converge (best upper bound {best_upper_bound})")]
    NoConvergence { what: String, best_upper_bound: f64 },
    #[error("sample point {0} sits at distance zero from the inversion basepoint")]
    BasepointDegenerate(String),
    #[error("label {0} not present in sample")]
    UnknownLabel(String),
    #[error("not enough points: need {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("neighbourhood of the probe point holds {got} sample points, need {needed}")]
    SparseNeighborhood { needed: usize, got: usize },
    #[error("map does not preserve the horizontal foliation (spread {spread})")]
    FoliationBroken { spread: f64 },
    #[error("distortion grows across scales (eta(1) from {first} to {last})")]
    NotQuasisymmetric { first: f64, last: f64 },
    #[error("interior map and boundary map disagree (max trace error {0})")]
    InconsistentPair(f64),
    #[error("endpoints lie on different horizontal leaves")]
    NotSameLeaf,
    #[error("curve family is empty or misses the grid")]
    EmptyFamily,
    #[error("grid bounding box is degenerate or unbounded")]
    UnboundedBox,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("campaign failed: {0}")]
    CampaignFailed(String),
    #[error("report shards come from different configurations ({0} vs {1})")]
    ConfigHashMismatch(String, String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
