use causal_inverter::InverterError;
use scm_core::ScmError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("no training rows")]
    Empty,
    #[error("normal equations singular even with ridge {0}")]
    Singular(f64),
    #[error("non-finite likelihood at step {0}")]
    Divergence(usize),
    #[error(transparent)]
    Inverter(#[from] InverterError),
    #[error(transparent)]
    Scm(#[from] ScmError),
}

pub type Result<T> = std::result::Result<T, BaselineError>;
