use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("amplitude vector is all zero")]
    ZeroState,
    #[error("dimension must be at least 2, got {0}")]
    Dimension(usize),
    #[error("index {index} out of range for length {len}")]
    Index { index: usize, len: usize },
    #[error("value out of domain: {0}")]
    Domain(String),
    #[error("invalid class boundaries: {0}")]
    Boundary(String),
    #[error("histogram is degenerate (at most one occupied bin)")]
    DegenerateHistogram,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("sample is empty")]
    EmptySample,
    #[error("invalid phantom spec: {0}")]
    Spec(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
