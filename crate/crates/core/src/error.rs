use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("too few points: need at least {required}, got {found}")]
    TooFewPoints { found: usize, required: usize },

    #[error("degenerate segment between points {index} and {}: consecutive points coincide", index + 1)]
    DegenerateSegment { index: usize },

    #[error("too few valid samples in {channel} channel: need at least 4, got {found}")]
    TooFewValidSamples { channel: &'static str, found: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("expected {expected} clusters, found {found}")]
    ClusterCountMismatch { expected: usize, found: usize },

    #[error("invalid manipulator config: {0}")]
    InvalidConfig(String),

    #[error("actuation out of bounds: {0}")]
    OutOfBounds(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("energy is not finite")]
    NonFiniteEnergy,

    #[error("equilibrium solver did not converge after {iterations} iterations (|grad|inf = {gradient:.3e} mJ/rad)")]
    SolverNotConverged { iterations: usize, gradient: f64 },

    #[error("invalid search bracket [{lo}, {hi}]")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("invalid index range [{lo}, {hi}] for {len} centers")]
    IndexRangeInvalid { lo: usize, hi: usize, len: usize },

    #[error("profiles have no overlapping arc range")]
    EmptyOverlap,

    #[error("{step}: {source}")]
    Step {
        step: String,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_step(self, step: impl Into<String>) -> Error {
        Error::Step {
            step: step.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, looking through step labels.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } => source.root(),
            other => other,
        }
    }
}
