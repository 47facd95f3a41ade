use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem instance: {0}")]
    InvalidInstance(String),

    #[error("degenerate instance: {0}")]
    Degenerate(&'static str),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("reward domain error: {0}")]
    Domain(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("instance too large for exhaustive search: {robots} robots (limit {limit})")]
    SearchSpace { robots: usize, limit: usize },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
