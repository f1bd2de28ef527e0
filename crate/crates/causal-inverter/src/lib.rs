//! Learnable triangular counterfactual model: context shift, orientation gate and monotone flow
//! per mechanism, trained by likelihood with cycle, transport-stability and gate-smoothness terms.

pub mod error;
pub mod features;
pub mod flow;
pub mod linalg;
pub mod loss;
pub mod model;
pub mod optim;
pub mod train;
pub mod triangular;

pub use error::{InverterError, Result};
pub use features::FeatureMap;
pub use flow::MonotoneFlow;
pub use loss::{
    evaluate, gradient_check, gradient_check_with, nll_loss, orientation_loss, transport_loss, GateUse, GradientCheck,
    LossBatch, LossParts, LossWeights, TransportPenaltyConfig,
};
pub use model::{GateMode, InverterModel, MechanismState};
pub use train::{
    init_least_squares, train, warm_start_gates, Checkpoint, GateSchedule, LossTrace, TraceRow, TrainConfig,
};
pub use triangular::{cycle_loss, direction_accuracy, predict_counterfactual, ScmOracle, TriangularModel};
