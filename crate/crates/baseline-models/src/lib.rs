//! Counterfactual baselines sharing one interface with the learned inverter: an additive noise
//! model, a gate-frozen monotone triangular transport, and a positive-scale contextual affine flow.

pub mod anm;
pub mod error;
pub mod flow;
pub mod interface;
pub mod metrics;
pub mod tmscm;

pub use anm::{fit_anm, AnmModel};
pub use error::{BaselineError, Result};
pub use flow::{fit_contextual_flow, ContextualFlow};
pub use interface::CounterfactualModel;
pub use metrics::{cf_mse, latent_recovery_error};
pub use tmscm::{fit_tmscm, TmScmQuantile};

use causal_inverter::{train, GateMode, InverterModel, TrainConfig};
use mechanism_zoo::DatasetBundle;

/// The learned inverter with orientation gates and the full objective.
pub fn fit_ours(
    bundle: &DatasetBundle,
    basis_seed: u64,
    cfg: &TrainConfig,
) -> Result<(InverterModel, causal_inverter::LossTrace)> {
    Ok(train(InverterModel::new(bundle.d(), basis_seed, GateMode::Learned), bundle, cfg)?)
}
