use thiserror::Error;

use crate::lattice::Site;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}: expected 2 <= d <= {max}", max = crate::lattice::MAX_DIM)]
    InvalidDimension(usize),

    #[error("site {0} is not in the outer boundary of the cluster")]
    NotInBoundary(Site),

    #[error("site {site} has dimension {found}, cluster has dimension {expected}")]
    DimensionMismatch { site: Site, expected: usize, found: usize },

    #[error("empty site set")]
    EmptySet,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line sampling failed: {rejections} consecutive lines missed the target")]
    SamplingFailure { rejections: u64 },

    #[error("walker relaunch cap of {cap} exceeded")]
    RelaunchCapExceeded { cap: u64 },

    #[error("step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("too few valid entries for a fit: {found} (need {needed})")]
    TooFewEntries { found: usize, needed: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
