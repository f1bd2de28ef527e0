use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("manifest check failed: {0}")]
    Manifest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Scm(#[from] scm_core::ScmError),
    #[error(transparent)]
    Zoo(#[from] mechanism_zoo::ZooError),
    #[error(transparent)]
    Sampler(#[from] balanced_sampler::SamplerError),
    #[error(transparent)]
    Stats(#[from] stats_kit::StatsError),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
