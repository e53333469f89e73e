use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not positive semidefinite (pivot {pivot})")]
    NotPositiveSemidefinite { pivot: usize },

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("geometry infeasible: {0}")]
    GeometryInfeasible(String),

    #[error("scale unrepresentable at level {level}: {reason}")]
    ScaleUnrepresentable { level: usize, reason: String },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("depth exhausted: {0}")]
    DepthExhausted(String),

    #[error("resolution guard violated at scale {scale:e}: {reason}")]
    Resolution { scale: f64, reason: String },

    #[error("insufficient scales: {usable} usable, at least 4 required")]
    InsufficientScales { usable: usize },

    #[error("regime error: {0}")]
    Regime(String),

    #[error("degenerate regime: {0}")]
    DegenerateRegime(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn at_stage(self, stage: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}
