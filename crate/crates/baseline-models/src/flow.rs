use causal_inverter::linalg::{dot, ridge};
use causal_inverter::loss::HALF_LN_2PI;
use causal_inverter::{FeatureMap, TriangularModel};
use mechanism_zoo::DatasetBundle;
use scm_core::rng;
use serde::{Deserialize, Serialize};

use crate::error::{BaselineError, Result};

/// Positive-scale affine flow `v_i = m_i(c) + exp(a_i(c)) u_i`, with `m_i` and `a_i` linear in the
/// shared feature basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContextualFlow {
    features: Vec<FeatureMap>,
    shift: Vec<Vec<f64>>,
    log_scale: Vec<Vec<f64>>,
}

impl ContextualFlow {
    pub fn shift(&self, i: usize, context: &[f64]) -> f64 {
        dot(&self.shift[i], &self.features[i].eval(context))
    }

    pub fn scale(&self, i: usize, context: &[f64]) -> f64 {
        dot(&self.log_scale[i], &self.features[i].eval(context)).exp()
    }

    /// Mean negative log-likelihood per row, summed over mechanisms.
    pub fn nll(&self, rows: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for v in rows {
            for i in 0..self.features.len() {
                let f = self.features[i].eval(&v[..i]);
                let a = dot(&self.log_scale[i], &f);
                let u = (v[i] - dot(&self.shift[i], &f)) * (-a).exp();
                total += 0.5 * u * u + a + HALF_LN_2PI;
            }
        }
        total / rows.len() as f64
    }
}

/// Outer rounds of the alternating fit.
pub const FIT_ROUNDS: usize = 100;
const LOG_SCALE_CLAMP: f64 = 20.0;
/// Ridge penalty per unit of total row weight; keeps near-collinear projections solvable.
const RELATIVE_RIDGE: f64 = 1e-8;

/// Exact maximum likelihood by block coordinate descent. Each mechanism's objective is convex in
/// the shift weights for fixed scale (weighted least squares) and in the log-scale weights for
/// fixed shift (Newton steps with halving), so every round is non-increasing.
pub fn fit_contextual_flow(bundle: &DatasetBundle, basis_seed: u64) -> Result<ContextualFlow> {
    let rows = &bundle.v_train;
    if rows.is_empty() {
        return Err(BaselineError::Empty);
    }
    let d = rows[0].len();
    let features: Vec<FeatureMap> =
        (0..d).map(|i| FeatureMap::new(i, rng::derive_seed(basis_seed, i as u64))).collect();
    let mut shift = Vec::with_capacity(d);
    let mut log_scale = Vec::with_capacity(d);
    for (i, fmap) in features.iter().enumerate() {
        let x: Vec<Vec<f64>> = rows.iter().map(|v| fmap.eval(&v[..i])).collect();
        let y: Vec<f64> = rows.iter().map(|v| v[i]).collect();
        let (m, a) = fit_mechanism(&x, &y)?;
        shift.push(m);
        log_scale.push(a);
    }
    Ok(ContextualFlow { features, shift, log_scale })
}

fn objective(x: &[Vec<f64>], y: &[f64], m: &[f64], a: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(f, y)| {
            let la = dot(a, f).clamp(-LOG_SCALE_CLAMP, LOG_SCALE_CLAMP);
            let u = (y - dot(m, f)) * (-la).exp();
            0.5 * u * u + la
        })
        .sum::<f64>()
        / x.len() as f64
}

fn fit_mechanism(x: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = x[0].len();
    let n = x.len() as f64;
    let mut m = ridge(x, y, None, RELATIVE_RIDGE * n)?;
    let var = x.iter().zip(y).map(|(f, y)| (y - dot(&m, f)).powi(2)).sum::<f64>() / n;
    let mut a = vec![0.0; p];
    a[0] = 0.5 * var.max(1e-12).ln();
    let mut current = objective(x, y, &m, &a);
    if !current.is_finite() {
        return Err(BaselineError::Divergence(0));
    }
    for round in 0..FIT_ROUNDS {
        let start = current;
        // log-scale: Newton direction as weighted least squares with weights 2q, q = (r / s)^2
        let mut w = Vec::with_capacity(x.len());
        let mut z = Vec::with_capacity(x.len());
        for (f, yv) in x.iter().zip(y) {
            let la = dot(&a, f).clamp(-LOG_SCALE_CLAMP, LOG_SCALE_CLAMP);
            let q = ((yv - dot(&m, f)) * (-la).exp()).powi(2).max(1e-12);
            w.push(2.0 * q);
            z.push((q - 1.0) / (2.0 * q));
        }
        let delta = ridge(x, &z, Some(&w), RELATIVE_RIDGE * w.iter().sum::<f64>())?;
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = a.iter().zip(&delta).map(|(a, d)| a + step * d).collect();
            let value = objective(x, y, &m, &trial);
            if value.is_finite() && value <= current {
                a = trial;
                current = value;
                break;
            }
            step *= 0.5;
            if step < 1e-8 {
                break;
            }
        }
        // shift: weighted least squares with weights 1 / s^2
        let inv_var: Vec<f64> =
            x.iter().map(|f| (-2.0 * dot(&a, f).clamp(-LOG_SCALE_CLAMP, LOG_SCALE_CLAMP)).exp()).collect();
        let trial = ridge(x, y, Some(&inv_var), RELATIVE_RIDGE * inv_var.iter().sum::<f64>())?;
        let value = objective(x, y, &trial, &a);
        if value.is_finite() && value <= current {
            m = trial;
            current = value;
        }
        if !current.is_finite() {
            return Err(BaselineError::Divergence(round));
        }
        if start - current < 1e-12 {
            break;
        }
    }
    Ok((m, a))
}

impl TriangularModel for ContextualFlow {
    fn dim(&self) -> usize {
        self.features.len()
    }

    fn forward_step(&self, i: usize, context: &[f64], u: f64) -> f64 {
        self.shift(i, context) + self.scale(i, context) * u
    }

    fn inverse_step(&self, i: usize, context: &[f64], v: f64) -> f64 {
        (v - self.shift(i, context)) / self.scale(i, context)
    }

    fn orientation(&self, _i: usize, _context: &[f64]) -> i8 {
        1
    }
}
