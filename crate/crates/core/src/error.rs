use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("oracle inconsistent: {0}")]
    OracleInconsistent(String),
    #[error("oracle failure: {0}")]
    OracleFailure(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{variant} conflicts with the supplied configuration: {detail}")]
    VariantConfigConflict { variant: String, detail: String },
    #[error("non-finite value in iterate {iteration}")]
    NonFinite { iteration: usize },
    #[error("no reference solution available")]
    MissingReference,
    #[error("B is not of full column rank")]
    RankDeficientB,
    #[error("{0} requires a strictly positive definite proximal weight")]
    RequiresPositiveDefinite(String),
    #[error("metric is not positive definite (quadratic form value {0:e})")]
    NotPositiveDefinite(f64),
    #[error("trace too short for rate estimation: {0} iterates, need at least 10")]
    InsufficientTrace(usize),
    #[error("every tail distance lies below the noise floor")]
    NoiseFloor,
    #[error("symmetric eigendecomposition did not converge")]
    EigenFailure,
    #[error("not converged after {0} iterations")]
    NotConverged(usize),
    #[error("malformed grid: {0}")]
    Grid(String),
    #[error("malformed trace: {0}")]
    Trace(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
