use std::path::PathBuf;

/// Errors produced across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("state diverged at step {step}: {state:?}")]
    NonFinite { step: usize, state: [f64; 3] },

    #[error("requested {requested} rows but the source only has {available}")]
    TooLarge { requested: usize, available: usize },

    #[error("malformed catalog at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("requested {requested} analogs but only {admissible} admissible catalog rows")]
    NotEnoughAnalogs { requested: usize, admissible: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate analog distances: all log ratios vanish")]
    DegenerateDistances,

    #[error("analog distance {index} is zero; exclude exact matches before estimation")]
    ZeroDistance { index: usize },

    #[error("catalog size overflow: {0}")]
    Overflow(String),

    #[error("covariance of component {component} is not positive definite")]
    CovarianceCollapse { component: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
