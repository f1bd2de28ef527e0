//! Objective terms and their analytic gradients.
//!
//! All heads are linear in the mechanism features, so every term is differentiated with respect to
//! the per-row head outputs first and then pulled back through the features.

use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};
use scm_core::rng::{self, Rng};
use serde::{Deserialize, Serialize};

use crate::error::{InverterError, Result};
use crate::flow::{MonotoneFlow, N_KNOTS};
use crate::model::{InverterModel, MechanismState, GATE_GAIN, HEAD_SCORE, HEAD_SHIFT, HEAD_SLOPE, N_HEADS};
use crate::triangular::cycle_loss;

pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
pub const JITTER_SD: f64 = 0.05;
pub const DECISIVENESS: f64 = 0.1;
pub const GRADIENT_CHECK_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportPenaltyConfig {
    pub grid_points: usize,
    pub z_max: f64,
    pub pairs: usize,
    pub step: f64,
}

impl Default for TransportPenaltyConfig {
    fn default() -> Self {
        Self { grid_points: 9, z_max: 3.0, pairs: 8, step: 1e-3 }
    }
}

impl TransportPenaltyConfig {
    /// Evenly spaced, symmetric about zero.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.grid_points.max(2);
        (0..n).map(|k| -self.z_max + 2.0 * self.z_max * k as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub cyc: f64,
    pub tr: f64,
    pub ori: f64,
}

impl LossWeights {
    pub const ZERO: LossWeights = LossWeights { cyc: 0.0, tr: 0.0, ori: 0.0 };
}

/// How orientation gates enter the likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateUse {
    /// Expected NLL over the hard orientation with `P(+1) = (1 + tanh(4 score)) / 2`.
    Relaxed,
    /// Hard `sign` gates; no gradient reaches the gate score through the likelihood.
    Hard,
}

/// A minibatch plus the random draws the penalty terms need, fixed so the objective is deterministic.
#[derive(Debug, Clone)]
pub struct LossBatch {
    pub rows: Vec<Vec<f64>>,
    /// Base draws for the cycle term.
    pub u_base: Vec<Vec<f64>>,
    /// `pairs[i]`: row-index pairs `(c, c~)` for the transport term of mechanism `i`.
    pub pairs: Vec<Vec<(usize, usize)>>,
    /// `jitter[i][r]`: context perturbation for the orientation term of mechanism `i` at row `r`.
    pub jitter: Vec<Vec<Vec<f64>>>,
}

impl LossBatch {
    /// Rows only; penalty terms that need draws evaluate to zero.
    pub fn plain(rows: Vec<Vec<f64>>) -> Self {
        Self { rows, u_base: Vec::new(), pairs: Vec::new(), jitter: Vec::new() }
    }

    pub fn draw(rows: Vec<Vec<f64>>, tcfg: &TransportPenaltyConfig, rng: &mut Rng) -> Self {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.len());
        let u_base = (0..n)
            .map(|_| (0..d).map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)).collect())
            .collect();
        let pairs = (0..d)
            .map(|i| {
                if i == 0 || n < 2 {
                    return Vec::new();
                }
                (0..tcfg.pairs)
                    .map(|_| {
                        let s = index::sample(rng, n, 2);
                        (s.index(0), s.index(1))
                    })
                    .collect()
            })
            .collect();
        let normal = Normal::new(0.0, JITTER_SD).expect("positive sd");
        let jitter = (0..d).map(|i| (0..n).map(|_| (0..i).map(|_| normal.sample(rng)).collect()).collect()).collect();
        Self { rows, u_base, pairs, jitter }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub total: f64,
    pub nll: f64,
    pub cyc: f64,
    pub tr: f64,
    pub ori: f64,
}

impl LossParts {
    pub fn is_finite(&self) -> bool {
        self.total.is_finite() && self.nll.is_finite() && self.tr.is_finite() && self.ori.is_finite()
    }
}

type HeadGrad = [f64; N_HEADS];

/// `l = u^2/2 + ln(2 pi)/2 + ln q'(u)` at `u = q^-1(sigma (v - m))`, and `dl/d(heads)`.
fn row_nll(st: &MechanismState, resid: f64, sigma: f64) -> (f64, HeadGrad) {
    let flow = &st.flow;
    let u = flow.inverse(sigma * resid);
    let qp = flow.derivative(u);
    let g = u + flow.second_derivative(u) / qp;
    let ell = 0.5 * u * u + HALF_LN_2PI + qp.ln();
    let integrals = MonotoneFlow::basis_integrals(u);
    let hats = MonotoneFlow::hats(u);
    let mut grad = [0.0; N_HEADS];
    grad[HEAD_SHIFT] = -sigma * g / qp;
    for j in 0..N_KNOTS {
        grad[HEAD_SLOPE + j] = (hats[j] - g * integrals[j]) / qp * st.slope_grad[j];
    }
    (ell, grad)
}

fn add_scaled(acc: &mut HeadGrad, g: &HeadGrad, c: f64) {
    for (a, b) in acc.iter_mut().zip(g) {
        *a += c * b;
    }
}

fn add_outer(grad: &mut [f64], offset: usize, p: usize, heads: &HeadGrad, f: &[f64]) {
    for (h, &c) in heads.iter().enumerate() {
        if c != 0.0 {
            for (slot, x) in grad[offset + h * p..offset + (h + 1) * p].iter_mut().zip(f) {
                *slot += c * x;
            }
        }
    }
}

/// Variance over the grid of `|dK/dz|` for one context pair, accumulating head gradients if asked.
fn transport_pair(
    a: &MechanismState,
    b: &MechanismState,
    grid: &[f64],
    step: f64,
    grads: Option<(&mut HeadGrad, &mut HeadGrad, f64)>,
) -> f64 {
    let k = |z: f64| {
        let y = b.hard * (a.hard * a.flow.eval(z) + a.shift - b.shift);
        b.flow.inverse(y)
    };
    let derivs: Vec<f64> = grid.iter().map(|&z| (k(z + step) - k(z - step)) / (2.0 * step)).collect();
    let mags: Vec<f64> = derivs.iter().map(|x| x.abs()).collect();
    let n = grid.len() as f64;
    let mean = mags.iter().sum::<f64>() / n;
    let penalty = mags.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    if let Some((ga, gb, scale)) = grads {
        for (idx, &z) in grid.iter().enumerate() {
            let dp_dd = scale * 2.0 / n * (mags[idx] - mean) * derivs[idx].signum();
            for (zz, sign) in [(z + step, 1.0), (z - step, -1.0)] {
                let upstream = dp_dd * sign / (2.0 * step);
                let kz = k(zz);
                let qbp = b.flow.derivative(kz);
                let ia = MonotoneFlow::basis_integrals(zz);
                let ib = MonotoneFlow::basis_integrals(kz);
                let c = upstream / qbp;
                ga[HEAD_SHIFT] += c * b.hard;
                gb[HEAD_SHIFT] -= c * b.hard;
                for j in 0..N_KNOTS {
                    ga[HEAD_SLOPE + j] += c * b.hard * a.hard * ia[j] * a.slope_grad[j];
                    gb[HEAD_SLOPE + j] -= c * ib[j] * b.slope_grad[j];
                }
            }
        }
    }
    penalty
}

/// Total objective `nll + cyc * L_cyc + tr * L_tr + ori * L_ori` and, when `grad` is given, its
/// gradient with respect to the model parameters. Terms with zero weight contribute no gradient.
///
/// The cycle term is exactly zero up to rounding for this parametrization (the inverse is
/// analytic), so its gradient is taken as zero.
pub fn evaluate(
    model: &InverterModel,
    batch: &LossBatch,
    weights: &LossWeights,
    gate_use: GateUse,
    tcfg: &TransportPenaltyConfig,
    mut grad: Option<&mut [f64]>,
) -> Result<LossParts> {
    let n = batch.rows.len();
    if n == 0 {
        return Err(InverterError::EmptyBatch);
    }
    if let Some(g) = grad.as_deref_mut() {
        assert_eq!(g.len(), model.n_params(), "gradient buffer size");
        g.fill(0.0);
    }
    let want = grad.is_some();
    let d = model.d();
    let inv_n = 1.0 / n as f64;
    let gated = (1..d).filter(|&i| model.has_gate(i)).count();
    let grid = tcfg.grid();
    let (mut nll, mut tr, mut ori) = (0.0, 0.0, 0.0);

    for i in 0..d {
        let fmap = model.feature_map(i);
        let p = fmap.dim();
        let offset = model.param_range(i).start;
        let feats: Vec<Vec<f64>> = batch.rows.iter().map(|v| fmap.eval(&v[..i])).collect();
        let states: Vec<MechanismState> = feats.iter().map(|f| model.state_from_features(i, f)).collect();
        let mut heads: Vec<HeadGrad> = vec![[0.0; N_HEADS]; if want { n } else { 0 }];

        let mixture = gate_use == GateUse::Relaxed && model.has_gate(i);
        for (r, st) in states.iter().enumerate() {
            let resid = batch.rows[r][i] - st.shift;
            if mixture {
                let wp = 0.5 * (1.0 + st.relaxed);
                let (lp, gp) = row_nll(st, resid, 1.0);
                let (lm, gm) = row_nll(st, resid, -1.0);
                nll += inv_n * (wp * lp + (1.0 - wp) * lm);
                if want {
                    add_scaled(&mut heads[r], &gp, inv_n * wp);
                    add_scaled(&mut heads[r], &gm, inv_n * (1.0 - wp));
                    heads[r][HEAD_SCORE] += inv_n * 0.5 * (lp - lm) * GATE_GAIN * (1.0 - st.relaxed * st.relaxed);
                }
            } else {
                let (l, g) = row_nll(st, resid, st.hard);
                nll += inv_n * l;
                if want {
                    add_scaled(&mut heads[r], &g, inv_n);
                }
            }
        }

        if let Some(pairs) = batch.pairs.get(i).filter(|p| !p.is_empty()) {
            let scale = 1.0 / pairs.len() as f64;
            for &(a, b) in pairs {
                let grads = if want && weights.tr != 0.0 {
                    let (ha, hb) = two_mut(&mut heads, a, b);
                    Some((ha, hb, scale * weights.tr))
                } else {
                    None
                };
                tr += scale * transport_pair(&states[a], &states[b], &grid, tcfg.step, grads);
            }
        }

        let jitter = batch.jitter.get(i).filter(|j| !j.is_empty());
        if let (true, Some(jitter)) = (model.has_gate(i), jitter) {
            let norm = inv_n / gated as f64;
            let score_w = model.head(i, HEAD_SCORE).to_vec();
            let use_grad = want && weights.ori != 0.0;
            for (r, st) in states.iter().enumerate() {
                let delta = &jitter[r];
                let shifted: Vec<f64> = batch.rows[r][..i].iter().zip(delta).map(|(c, e)| c + e).collect();
                let f2 = fmap.eval(&shifted);
                let s1 = st.relaxed;
                let s2 = (GATE_GAIN * crate::linalg::dot(&score_w, &f2)).tanh();
                let dd: f64 = delta.iter().map(|x| x * x).sum();
                ori += norm * ((s1 - s2) * (s1 - s2) / dd + DECISIVENESS * (1.0 - s1 * s1));
                if use_grad {
                    let d1 = (2.0 * (s1 - s2) / dd - 2.0 * DECISIVENESS * s1) * GATE_GAIN * (1.0 - s1 * s1);
                    heads[r][HEAD_SCORE] += weights.ori * norm * d1;
                    let d2 = -2.0 * (s1 - s2) / dd * GATE_GAIN * (1.0 - s2 * s2);
                    let g = grad.as_deref_mut().expect("gradient requested");
                    let start = offset + HEAD_SCORE * p;
                    for (slot, x) in g[start..start + p].iter_mut().zip(&f2) {
                        *slot += weights.ori * norm * d2 * x;
                    }
                }
            }
        }

        if let Some(g) = grad.as_deref_mut() {
            for (h, f) in heads.iter().zip(&feats) {
                add_outer(g, offset, p, h, f);
            }
        }
    }

    let cyc = if batch.u_base.is_empty() { 0.0 } else { cycle_loss(model, &batch.rows, &batch.u_base) };
    let total = nll + weights.cyc * cyc + weights.tr * tr + weights.ori * ori;
    Ok(LossParts { total, nll, cyc, tr, ori })
}

fn two_mut<T>(xs: &mut [T], a: usize, b: usize) -> (&mut T, &mut T) {
    assert_ne!(a, b);
    if a < b {
        let (lo, hi) = xs.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = xs.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}

pub fn nll_loss(model: &InverterModel, rows: &[Vec<f64>], gate_use: GateUse) -> Result<f64> {
    let batch = LossBatch::plain(rows.to_vec());
    Ok(evaluate(model, &batch, &LossWeights::ZERO, gate_use, &TransportPenaltyConfig::default(), None)?.nll)
}

pub fn transport_loss(model: &InverterModel, batch: &LossBatch, tcfg: &TransportPenaltyConfig) -> Result<f64> {
    Ok(evaluate(model, batch, &LossWeights::ZERO, GateUse::Hard, tcfg, None)?.tr)
}

pub fn orientation_loss(model: &InverterModel, batch: &LossBatch) -> Result<f64> {
    Ok(evaluate(model, batch, &LossWeights::ZERO, GateUse::Hard, &TransportPenaltyConfig::default(), None)?.ori)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub checked: Vec<usize>,
}

/// Compares `analytic` with central differences of `loss` on `n_params` randomly chosen parameters.
/// Relative error uses the denominator `max(|analytic|, |numeric|, 1e-5)`.
pub fn gradient_check_with(
    model: &InverterModel,
    analytic: &[f64],
    n_params: usize,
    seed: u64,
    loss: impl Fn(&InverterModel) -> f64,
) -> GradientCheck {
    let total = model.n_params();
    let mut r = rng::stream(seed, "gradient-check");
    let checked: Vec<usize> =
        if n_params >= total { (0..total).collect() } else { index::sample(&mut r, total, n_params).into_vec() };
    let mut probe = model.clone();
    let (mut max_rel, mut max_abs) = (0.0f64, 0.0f64);
    for &k in &checked {
        let base = probe.theta()[k];
        probe.theta_mut()[k] = base + GRADIENT_CHECK_STEP;
        let up = loss(&probe);
        probe.theta_mut()[k] = base - GRADIENT_CHECK_STEP;
        let down = loss(&probe);
        probe.theta_mut()[k] = base;
        let numeric = (up - down) / (2.0 * GRADIENT_CHECK_STEP);
        let err = (analytic[k] - numeric).abs();
        max_abs = max_abs.max(err);
        max_rel = max_rel.max(err / analytic[k].abs().max(numeric.abs()).max(1e-5));
    }
    GradientCheck { max_rel_error: max_rel, max_abs_error: max_abs, checked }
}

/// Gradient check of the full objective returned by [`evaluate`].
pub fn gradient_check(
    model: &InverterModel,
    batch: &LossBatch,
    weights: &LossWeights,
    gate_use: GateUse,
    tcfg: &TransportPenaltyConfig,
    n_params: usize,
    seed: u64,
) -> Result<GradientCheck> {
    let mut analytic = vec![0.0; model.n_params()];
    evaluate(model, batch, weights, gate_use, tcfg, Some(&mut analytic))?;
    Ok(gradient_check_with(model, &analytic, n_params, seed, |m| {
        evaluate(m, batch, weights, gate_use, tcfg, None).map_or(f64::NAN, |p| p.total)
    }))
}

/// Uniform row indices for a minibatch.
pub fn sample_indices(n: usize, batch: usize, rng: &mut Rng) -> Vec<usize> {
    (0..batch).map(|_| rng.random_range(0..n)).collect()
}
