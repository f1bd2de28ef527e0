use rand_distr::{Distribution, Normal};
use scm_core::rng;
use serde::{Deserialize, Serialize};

use crate::features::FeatureMap;
use crate::flow::{slope_from_log, Knots, MonotoneFlow, N_KNOTS};
use crate::triangular::TriangularModel;

/// Relaxed gate is `tanh(GATE_GAIN * score)`.
pub const GATE_GAIN: f64 = 4.0;
pub const HEAD_SHIFT: usize = 0;
pub const HEAD_SCORE: usize = 1;
pub const HEAD_SLOPE: usize = 2;
pub const N_HEADS: usize = HEAD_SLOPE + N_KNOTS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateMode {
    /// Non-root mechanisms carry a learned orientation gate.
    Learned,
    /// Every gate is fixed to `+1`: a globally monotone triangular model.
    FrozenPositive,
}

/// Evaluated heads of one mechanism at one context.
#[derive(Debug, Clone)]
pub struct MechanismState {
    pub shift: f64,
    pub score: f64,
    /// `tanh(4 score)` for gated mechanisms, else `1`.
    pub relaxed: f64,
    /// `+1` when `relaxed >= 0`, else `-1`.
    pub hard: f64,
    /// `dk_j / da_j` for the log-increment heads.
    pub slope_grad: Knots,
    pub flow: MonotoneFlow,
}

impl MechanismState {
    pub fn forward(&self, u: f64) -> f64 {
        self.shift + self.hard * self.flow.eval(u)
    }

    pub fn inverse(&self, v: f64) -> f64 {
        self.flow.inverse(self.hard * (v - self.shift))
    }
}

/// Triangular model `v_i = m_i(c) + s_i(c) q_i(u_i; c)` with `c = v_{<i}` and a standard gaussian base.
///
/// Mechanism `i` has `N_HEADS` linear heads over its feature map, stored head-major in one flat
/// parameter vector: shift, gate score, then one log-increment per knot.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "ModelRecord", into = "ModelRecord")]
pub struct InverterModel {
    d: usize,
    basis_seed: u64,
    gate_mode: GateMode,
    features: Vec<FeatureMap>,
    theta: Vec<f64>,
    offsets: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelRecord {
    d: usize,
    basis_seed: u64,
    gate_mode: GateMode,
    theta: Vec<f64>,
}

impl From<ModelRecord> for InverterModel {
    fn from(r: ModelRecord) -> Self {
        let mut m = InverterModel::new(r.d, r.basis_seed, r.gate_mode);
        if r.theta.len() == m.theta.len() {
            m.theta = r.theta;
        }
        m
    }
}

impl From<InverterModel> for ModelRecord {
    fn from(m: InverterModel) -> Self {
        ModelRecord { d: m.d, basis_seed: m.basis_seed, gate_mode: m.gate_mode, theta: m.theta }
    }
}

impl InverterModel {
    /// Zero-parameter model: `m = 0`, `s = +1`, identity flows.
    pub fn new(d: usize, basis_seed: u64, gate_mode: GateMode) -> Self {
        let features: Vec<FeatureMap> =
            (0..d).map(|i| FeatureMap::new(i, rng::derive_seed(basis_seed, i as u64))).collect();
        let mut offsets = Vec::with_capacity(d + 1);
        let mut total = 0;
        for f in &features {
            offsets.push(total);
            total += N_HEADS * f.dim();
        }
        offsets.push(total);
        Self { d, basis_seed, gate_mode, features, theta: vec![0.0; total], offsets }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn basis_seed(&self) -> u64 {
        self.basis_seed
    }

    pub fn gate_mode(&self) -> GateMode {
        self.gate_mode
    }

    pub fn n_params(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn feature_map(&self, i: usize) -> &FeatureMap {
        &self.features[i]
    }

    pub fn has_gate(&self, i: usize) -> bool {
        i > 0 && self.gate_mode == GateMode::Learned
    }

    pub fn param_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn param_index(&self, i: usize, head: usize, t: usize) -> usize {
        self.offsets[i] + head * self.features[i].dim() + t
    }

    pub fn head(&self, i: usize, head: usize) -> &[f64] {
        let p = self.features[i].dim();
        let start = self.offsets[i] + head * p;
        &self.theta[start..start + p]
    }

    pub fn head_mut(&mut self, i: usize, head: usize) -> &mut [f64] {
        let p = self.features[i].dim();
        let start = self.offsets[i] + head * p;
        &mut self.theta[start..start + p]
    }

    /// Mechanism `i` evaluated from precomputed features.
    pub fn state_from_features(&self, i: usize, f: &[f64]) -> MechanismState {
        let dot = |h: usize| self.head(i, h).iter().zip(f).map(|(w, x)| w * x).sum::<f64>();
        let shift = dot(HEAD_SHIFT);
        let (score, relaxed) = if self.has_gate(i) {
            let s = dot(HEAD_SCORE);
            (s, (GATE_GAIN * s).tanh())
        } else {
            (0.0, 1.0)
        };
        let mut slopes = [0.0; N_KNOTS];
        let mut slope_grad = [0.0; N_KNOTS];
        for j in 0..N_KNOTS {
            (slopes[j], slope_grad[j]) = slope_from_log(dot(HEAD_SLOPE + j));
        }
        MechanismState {
            shift,
            score,
            relaxed,
            hard: if relaxed >= 0.0 { 1.0 } else { -1.0 },
            slope_grad,
            flow: MonotoneFlow::from_slopes(slopes),
        }
    }

    pub fn state(&self, i: usize, context: &[f64]) -> MechanismState {
        self.state_from_features(i, &self.features[i].eval(context))
    }

    /// Joint gauge flip of mechanism `i`: negated gate score and mirrored knot slopes, so that
    /// `q(u) -> -q(-u)`. Leaves the model's observational law unchanged under symmetric base noise.
    pub fn reflect(&mut self, i: usize) {
        for w in self.head_mut(i, HEAD_SCORE) {
            *w = -*w;
        }
        for j in 0..N_KNOTS / 2 {
            let a = self.head(i, HEAD_SLOPE + j).to_vec();
            let b = self.head(i, HEAD_SLOPE + N_KNOTS - 1 - j).to_vec();
            self.head_mut(i, HEAD_SLOPE + j).copy_from_slice(&b);
            self.head_mut(i, HEAD_SLOPE + N_KNOTS - 1 - j).copy_from_slice(&a);
        }
    }

    /// Fills every parameter with `N(0, scale^2)` draws.
    pub fn randomize(&mut self, scale: f64, seed: u64) {
        let mut r = rng::stream(seed, "randomize");
        let normal = Normal::new(0.0, scale).expect("finite scale");
        for w in &mut self.theta {
            *w = normal.sample(&mut r);
        }
    }

    /// Negative log-likelihood of one row under hard gates.
    pub fn nll_row(&self, v: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.d {
            let st = self.state(i, &v[..i]);
            let u = st.inverse(v[i]);
            total += 0.5 * u * u + 0.5 * (2.0 * std::f64::consts::PI).ln() + st.flow.derivative(u).ln();
        }
        total
    }
}

impl TriangularModel for InverterModel {
    fn dim(&self) -> usize {
        self.d
    }

    fn forward_step(&self, i: usize, context: &[f64], u: f64) -> f64 {
        self.state(i, context).forward(u)
    }

    fn inverse_step(&self, i: usize, context: &[f64], v: f64) -> f64 {
        self.state(i, context).inverse(v)
    }

    fn orientation(&self, i: usize, context: &[f64]) -> i8 {
        if self.state(i, context).hard > 0.0 {
            1
        } else {
            -1
        }
    }
}
