use causal_inverter::{predict_counterfactual, InverterModel, ScmOracle, TriangularModel};
use scm_core::Intervention;

/// A fitted model that can abduct latents and answer counterfactual queries.
pub trait CounterfactualModel: Send + Sync {
    fn name(&self) -> &'static str;
    fn abduct(&self, v: &[f64]) -> Vec<f64>;
    fn predict_counterfactual(&self, factual: &[f64], intervention: &Intervention) -> Vec<f64>;
}

/// Models with a triangular recursion get abduction and counterfactuals from it.
macro_rules! triangular_counterfactual {
    ($ty:ty, $name:expr) => {
        impl CounterfactualModel for $ty {
            fn name(&self) -> &'static str {
                $name
            }
            fn abduct(&self, v: &[f64]) -> Vec<f64> {
                TriangularModel::inverse(self, v)
            }
            fn predict_counterfactual(&self, factual: &[f64], intervention: &Intervention) -> Vec<f64> {
                predict_counterfactual(self, factual, intervention)
            }
        }
    };
}

triangular_counterfactual!(InverterModel, "ours");
triangular_counterfactual!(ScmOracle, "oracle");
triangular_counterfactual!(crate::anm::AnmModel, "anm");
triangular_counterfactual!(crate::tmscm::TmScmQuantile, "tm_scm");
triangular_counterfactual!(crate::flow::ContextualFlow, "contextual_flow");
