use scm_core::ScmError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InverterError {
    #[error("non-finite loss at step {step}: nll={nll}, transport={transport}, orientation={orientation}")]
    Divergence { step: usize, nll: f64, transport: f64, orientation: f64 },
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("singular linear system")]
    Singular,
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error("checkpoint: {0}")]
    Checkpoint(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, InverterError>;
