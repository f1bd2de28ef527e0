use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScmError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("mechanism {index}: inversion failed for target {target} (no bracket on [-50, 50])")]
    Inversion { index: usize, target: f64 },
    #[error("mechanism {index}: zero derivative in u at the abducted point")]
    ZeroDerivative { index: usize },
    #[error("invalid causal order: {0}")]
    Order(String),
    #[error("invalid intervention: {0}")]
    Intervention(String),
    #[error("models are not comparable: {0}")]
    Incompatible(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, ScmError>;
