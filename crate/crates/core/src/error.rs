use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("trajectory {0} has no available observations")]
    EmptyTrajectory(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate observation for trajectory {id} at time {time}")]
    DuplicateObservation { id: String, time: String },

    #[error("inconsistent dimension: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("point is not on the unit sphere (norm {0})")]
    NotUnitNorm(f64),

    #[error("latitude {0} is outside [-90, 90]")]
    LatitudeOutOfRange(f64),

    #[error("trajectories {0} and {1} share no observed time slice")]
    EmptyCommonSupport(usize, usize),

    #[error("center undefined at time slice {0}")]
    UndefinedCenter(usize),

    #[error("all weights are zero")]
    ZeroWeights,

    #[error("degenerate spherical mean (norm {0:e})")]
    DegenerateSphericalMean(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid flow setup: {0}")]
    InvalidFlow(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
