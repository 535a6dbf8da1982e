use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("singular value {index} is not positive ({value})")]
    NonPositiveSingularValue { index: usize, value: f64 },
    #[error("index {index} out of range for width {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("Poisson ratio {0} outside (0, 0.5)")]
    InvalidPoisson(f64),
    #[error("inverted element: det(F) = {det} at particle {particle}")]
    InvertedElement { particle: usize, det: f64 },
    #[error("particle {particle} of object {object} left the grid interior")]
    OutOfDomain { object: usize, particle: usize },
    #[error("point is behind the camera (depth {0})")]
    BehindCamera(f64),
    #[error("point set is empty")]
    EmptySet,
    #[error("mask resolution mismatch: {0:?} vs {1:?}")]
    ResolutionMismatch((usize, usize), (usize, usize)),
    #[error("trajectory covers {available} frames, observations need {needed}")]
    FrameMismatch { needed: usize, available: usize },
    #[error("visual hull needs at least 3 views, got {0}")]
    DegenerateViews(usize),
    #[error("no input points")]
    EmptyInput,
    #[error("occupancy grid has no occupied voxel")]
    EmptyOccupancy,
    #[error("loss is not finite")]
    NonFiniteLoss,
    #[error("optimization diverged: {0}")]
    DivergedOptimization(String),
    #[error("not a permutation of 0..{0}")]
    InvalidPermutation(usize),
    #[error("no colliding initial velocities found after {0} attempts")]
    CollisionInfeasible(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for the failures a caller should treat as numerical divergence.
    pub fn is_divergence(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteLoss
                | Error::DivergedOptimization(_)
                | Error::InvertedElement { .. }
                | Error::OutOfDomain { .. }
        )
    }
}
