use causal_inverter::linalg::{dot, ridge};
use causal_inverter::{FeatureMap, InverterError, TriangularModel};
use mechanism_zoo::DatasetBundle;
use scm_core::rng;
use serde::{Deserialize, Serialize};

use crate::error::{BaselineError, Result};

pub const RIDGE_FALLBACK: f64 = 1e-6;

/// Additive noise model `v_i = g_i(v_{<i}) + u_i` with `g_i` least squares on the shared basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnmModel {
    features: Vec<FeatureMap>,
    weights: Vec<Vec<f64>>,
    /// Residual standard deviation per mechanism (reported, not used by abduction).
    pub residual_scale: Vec<f64>,
}

impl AnmModel {
    pub fn regression(&self, i: usize, context: &[f64]) -> f64 {
        dot(&self.weights[i], &self.features[i].eval(context))
    }
}

/// Plain least squares per mechanism; a `1e-6` ridge is added only if the normal equations are singular.
pub fn fit_anm(bundle: &DatasetBundle, basis_seed: u64) -> Result<AnmModel> {
    let rows = &bundle.v_train;
    if rows.is_empty() {
        return Err(BaselineError::Empty);
    }
    let d = rows[0].len();
    let features: Vec<FeatureMap> =
        (0..d).map(|i| FeatureMap::new(i, rng::derive_seed(basis_seed, i as u64))).collect();
    let mut weights = Vec::with_capacity(d);
    let mut residual_scale = Vec::with_capacity(d);
    for (i, fmap) in features.iter().enumerate() {
        let x: Vec<Vec<f64>> = rows.iter().map(|v| fmap.eval(&v[..i])).collect();
        let y: Vec<f64> = rows.iter().map(|v| v[i]).collect();
        let w = match ridge(&x, &y, None, 0.0) {
            Ok(w) => w,
            Err(InverterError::Singular) => {
                ridge(&x, &y, None, RIDGE_FALLBACK).map_err(|_| BaselineError::Singular(RIDGE_FALLBACK))?
            }
            Err(e) => return Err(e.into()),
        };
        let var = x.iter().zip(&y).map(|(f, y)| (y - dot(&w, f)).powi(2)).sum::<f64>() / rows.len() as f64;
        residual_scale.push(var.sqrt());
        weights.push(w);
    }
    Ok(AnmModel { features, weights, residual_scale })
}

impl TriangularModel for AnmModel {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn forward_step(&self, i: usize, context: &[f64], u: f64) -> f64 {
        self.regression(i, context) + u
    }

    fn inverse_step(&self, i: usize, context: &[f64], v: f64) -> f64 {
        v - self.regression(i, context)
    }

    fn orientation(&self, _i: usize, _context: &[f64]) -> i8 {
        1
    }
}
