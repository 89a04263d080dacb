use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("empty table")]
    EmptyTable,

    #[error("column not found: {0}")]
    MissingColumn(String),

    #[error("column `{0}` has zero variance after cleaning")]
    ZeroVariance(String),

    #[error("too few observations: {0}")]
    TooFewObservations(String),

    #[error("insufficient degrees of freedom: n={n}, k={k} (need n - k - 1 >= 1)")]
    DegreesOfFreedom { n: usize, k: usize },

    #[error("empty subset")]
    EmptySubset,

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
