use thiserror::Error;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("invalid sampler config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SamplerError>;
