use scm_core::ScmError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ZooError {
    #[error("unknown family tag '{0}'")]
    UnknownFamily(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("degenerate score distribution for mechanism {0}")]
    DegenerateScore(usize),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("empty orientation matrix")]
    Empty,
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ZooError>;
