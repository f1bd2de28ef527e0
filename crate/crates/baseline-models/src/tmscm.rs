use causal_inverter::{train, GateMode, InverterModel, LossTrace, TrainConfig, TriangularModel};
use mechanism_zoo::DatasetBundle;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Monotone triangular transport: the inverter with every gate frozen to `+1`, trained by likelihood.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TmScmQuantile {
    pub model: InverterModel,
}

/// Trains with the transport and orientation weights forced to zero.
pub fn fit_tmscm(bundle: &DatasetBundle, basis_seed: u64, cfg: &TrainConfig) -> Result<(TmScmQuantile, LossTrace)> {
    let cfg = TrainConfig { lambda_tr: 0.0, lambda_ori: 0.0, ..cfg.clone() };
    let (model, trace) = train(InverterModel::new(bundle.d(), basis_seed, GateMode::FrozenPositive), bundle, &cfg)?;
    Ok((TmScmQuantile { model }, trace))
}

impl TmScmQuantile {
    /// `dv_i / du_i` at `(context, u)`.
    pub fn partial_u(&self, i: usize, context: &[f64], u: f64) -> f64 {
        let st = self.model.state(i, context);
        st.hard * st.flow.derivative(u)
    }
}

impl TriangularModel for TmScmQuantile {
    fn dim(&self) -> usize {
        self.model.d()
    }

    fn forward_step(&self, i: usize, context: &[f64], u: f64) -> f64 {
        self.model.forward_step(i, context, u)
    }

    fn inverse_step(&self, i: usize, context: &[f64], v: f64) -> f64 {
        self.model.inverse_step(i, context, v)
    }

    fn orientation(&self, _i: usize, _context: &[f64]) -> i8 {
        1
    }
}
