use thiserror::Error;

/// Errors produced by the transforms, the layer, the simulator and the cost model.
#[derive(Debug, Error)]
pub enum Error {
    #[error("size error: {0}")]
    Size(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("encoding error: {0}")]
    Encoding(String),
    #[error("gate error: {0}")]
    Gate(String),
    #[error("stale or mismatched cache: {0}")]
    Cache(String),
    #[error("invalid model description: {0}")]
    Model(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
