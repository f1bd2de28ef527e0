//! Closed-form mechanism families and their ground-truth orientation fields.

use std::sync::Arc;

use rand::Rng as _;
use scm_core::rng::{self, Rng};
use scm_core::{ExogenousDistribution, LinearMechanism, Mechanism, NoiseFamily, SignGateMechanism, TriangularScm};
use serde::{Deserialize, Serialize};

use crate::config::{FamilyTag, SweepConfig};
use crate::error::{Result, ZooError};

/// Bend of the asymmetric response `g(u) = u + b (sqrt(1 + u^2) - 1)`.
pub const RESPONSE_BEND: f64 = 0.5;
/// Lower bound on the scale factor.
pub const SCALE_FLOOR: f64 = 0.2;
pub const SMOOTH_EPS: f64 = 0.1;
pub const SMOOTH_K: f64 = 4.0;
/// Coefficients of the amplitude modulation are drawn from `[-AMPLITUDE_RANGE, AMPLITUDE_RANGE]`.
pub const AMPLITUDE_RANGE: f64 = 1.0;
/// Ancestral sample size used to place gate thresholds.
pub const CALIBRATION_SIZE: usize = 50_000;

/// Strictly increasing response with slope in `[1 - b, 1 + b]`.
pub fn response(u: f64) -> f64 {
    u + RESPONSE_BEND * ((1.0 + u * u).sqrt() - 1.0)
}

pub fn response_inverse(y: f64) -> f64 {
    let b = RESPONSE_BEND;
    let w = y + b;
    (w - b * (w * w + 1.0 - b * b).sqrt()) / (1.0 - b * b)
}

pub fn response_slope(u: f64) -> f64 {
    1.0 + RESPONSE_BEND * u / (1.0 + u * u).sqrt()
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gate {
    None,
    Threshold { w: Vec<f64>, tau: f64 },
    Smooth { w: Vec<f64>, tau: f64, eps: f64, k: f64 },
}

impl Gate {
    /// Signed gate factor at `context`.
    pub fn factor(&self, context: &[f64]) -> f64 {
        match self {
            Gate::None => 1.0,
            Gate::Threshold { w, tau } => scm_core::sgn(dot(w, context) - tau),
            Gate::Smooth { w, tau, eps, k } => {
                let z = dot(w, context) - tau;
                scm_core::sgn(z) * (eps + (1.0 - eps) * (k * z).tanh().abs())
            }
        }
    }

    pub fn orientation(&self, context: &[f64]) -> i8 {
        if self.factor(context) >= 0.0 {
            1
        } else {
            -1
        }
    }
}

/// `v = tanh(shift_w . c + shift_b) + gate(c) * max(softplus(a + amp * tanh(scale_w . c)), 0.2) * g(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZooMechanism {
    pub shift_w: Vec<f64>,
    pub shift_b: f64,
    pub scale_a: f64,
    pub scale_amp: f64,
    pub scale_w: Vec<f64>,
    /// Direction of the gate score, drawn even for monotone families.
    pub score_w: Vec<f64>,
    pub gate: Gate,
}

impl ZooMechanism {
    pub fn shift(&self, c: &[f64]) -> f64 {
        (dot(&self.shift_w, c) + self.shift_b).tanh()
    }

    pub fn scale(&self, c: &[f64]) -> f64 {
        softplus(self.scale_a + self.scale_amp * dot(&self.scale_w, c).tanh()).max(SCALE_FLOOR)
    }

    /// Signed multiplier of `g(u)`.
    pub fn gain(&self, c: &[f64]) -> f64 {
        self.gate.factor(c) * self.scale(c)
    }

    pub fn score(&self, c: &[f64]) -> f64 {
        dot(&self.score_w, c)
    }
}

impl Mechanism for ZooMechanism {
    fn forward(&self, parents: &[f64], u: f64) -> f64 {
        self.shift(parents) + self.gain(parents) * response(u)
    }
    fn inverse(&self, parents: &[f64], v: f64) -> Option<f64> {
        Some(response_inverse((v - self.shift(parents)) / self.gain(parents)))
    }
    fn partial_u(&self, parents: &[f64], u: f64) -> f64 {
        self.gain(parents) * response_slope(u)
    }
}

/// Ground-truth orientation per variable, indexed like the mechanisms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientationTruth {
    gates: Vec<Gate>,
}

impl OrientationTruth {
    pub fn new(gates: Vec<Gate>) -> Self {
        Self { gates }
    }

    pub fn monotone(d: usize) -> Self {
        Self::new(vec![Gate::None; d])
    }

    pub fn d(&self) -> usize {
        self.gates.len()
    }

    pub fn sign(&self, var: usize, context: &[f64]) -> i8 {
        self.gates[var].orientation(context)
    }

    pub fn gate(&self, var: usize) -> &Gate {
        &self.gates[var]
    }
}

/// Draws the family-independent coefficients for every variable.
fn draw_base(d: usize, seed: u64) -> Vec<ZooMechanism> {
    let mut rng: Rng = rng::stream(seed, "coefficients");
    let uniform = |n: usize, r: f64, rng: &mut Rng| -> Vec<f64> { (0..n).map(|_| rng.random_range(-r..r)).collect() };
    (0..d)
        .map(|i| {
            let shift_w = uniform(i, 1.0, &mut rng);
            let shift_b = rng.random_range(-1.0..1.0);
            let scale_a = rng.random_range(-1.0..1.0);
            let scale_amp = rng.random_range(-AMPLITUDE_RANGE..AMPLITUDE_RANGE);
            let scale_w = uniform(i, 1.0, &mut rng);
            let score_w = uniform(i, 1.0, &mut rng);
            ZooMechanism { shift_w, shift_b, scale_a, scale_amp, scale_w, score_w, gate: Gate::None }
        })
        .collect()
}

fn gate_for(tag: FamilyTag, w: Vec<f64>, tau: f64) -> Gate {
    match tag {
        FamilyTag::SmoothFlip => Gate::Smooth { w, tau, eps: SMOOTH_EPS, k: SMOOTH_K },
        _ => Gate::Threshold { w, tau },
    }
}

/// Places each non-root threshold at the `rate` quantile of its score under ancestral sampling, in
/// causal order so later scores see the already-gated upstream mechanisms.
fn calibrate(
    mechs: &mut [ZooMechanism],
    tag: FamilyTag,
    rate: f64,
    noise: NoiseFamily,
    seed: u64,
    n_cal: usize,
) -> Result<Vec<f64>> {
    let d = mechs.len();
    let mut rng = rng::stream(seed, "calibration");
    let us: Vec<Vec<f64>> = (0..n_cal).map(|_| (0..d).map(|_| noise.sample(&mut rng)).collect()).collect();
    let mut vs: Vec<Vec<f64>> = us.iter().map(|u| vec![0.0; u.len()]).collect();
    for (v, u) in vs.iter_mut().zip(&us) {
        v[0] = mechs[0].forward(&[], u[0]);
    }
    let mut taus = Vec::with_capacity(d - 1);
    for i in 1..d {
        let mut scores: Vec<f64> = vs.iter().map(|v| mechs[i].score(&v[..i])).collect();
        scores.sort_by(f64::total_cmp);
        if scores[n_cal - 1] - scores[0] < 1e-12 {
            return Err(ZooError::DegenerateScore(i));
        }
        if rate > 0.0 {
            let k = ((rate * n_cal as f64).round() as usize).min(n_cal - 1);
            let tau = scores[k];
            mechs[i].gate = gate_for(tag, mechs[i].score_w.clone(), tau);
            taus.push(tau);
        } else {
            taus.push(f64::NEG_INFINITY);
        }
        for (v, u) in vs.iter_mut().zip(&us) {
            v[i] = mechs[i].forward(&v[..i], u[i]);
        }
    }
    Ok(taus)
}

/// Thresholds giving each non-root mechanism a negative-orientation rate of `strength / 2`
/// (`-inf` at strength 0, i.e. no flips), calibrated under gaussian noise.
pub fn calibrate_bridge(strength: f64, d: usize, seed: u64, n_cal: usize) -> Result<Vec<f64>> {
    calibrate_bridge_with_noise(strength, d, NoiseFamily::Gaussian, seed, n_cal)
}

pub fn calibrate_bridge_with_noise(
    strength: f64,
    d: usize,
    noise: NoiseFamily,
    seed: u64,
    n_cal: usize,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(ZooError::OutOfRange(format!("strength {strength}")));
    }
    if n_cal < 5000 {
        return Err(ZooError::Config(format!("n_cal = {n_cal} < 5000")));
    }
    if d < 2 {
        return Err(ZooError::Config(format!("d = {d} < 2")));
    }
    let mut mechs = draw_base(d, seed);
    calibrate(&mut mechs, FamilyTag::Bridge, strength / 2.0, noise, seed, n_cal)
}

/// Mechanisms of the configured family, indexed by variable (identity causal order).
pub fn make_mechanisms(config: &SweepConfig) -> Result<Vec<ZooMechanism>> {
    config.validate()?;
    let mut mechs = draw_base(config.d, config.seed);
    let rate = match config.family.tag {
        FamilyTag::GlobalMonotone => return Ok(mechs),
        FamilyTag::ThresholdFlip | FamilyTag::SmoothFlip => 0.5,
        FamilyTag::Bridge => config.family.strength.unwrap_or(0.0) / 2.0,
    };
    calibrate(&mut mechs, config.family.tag, rate, config.noise, config.seed, CALIBRATION_SIZE)?;
    Ok(mechs)
}

pub fn scm_from_mechanisms(
    mechs: &[ZooMechanism],
    noise: ExogenousDistribution,
) -> Result<(TriangularScm, OrientationTruth)> {
    let truth = OrientationTruth::new(mechs.iter().map(|m| m.gate.clone()).collect());
    let dyn_mechs: Vec<Arc<dyn Mechanism>> = mechs.iter().map(|m| Arc::new(m.clone()) as Arc<dyn Mechanism>).collect();
    Ok((TriangularScm::in_order(dyn_mechs, noise)?, truth))
}

pub fn make_scm(config: &SweepConfig) -> Result<(TriangularScm, OrientationTruth)> {
    let mechs = make_mechanisms(config)?;
    scm_from_mechanisms(&mechs, ExogenousDistribution::iid(config.noise, config.d))
}

/// `M: X = U_X, Y = sgn(X) U_Y` and `M': X = U_X, Y = U_Y`, both with standard gaussian noise.
pub fn make_counterexample_pair() -> (TriangularScm, TriangularScm) {
    let m = TriangularScm::in_order(
        vec![Arc::new(LinearMechanism::noise_only(1.0)), Arc::new(SignGateMechanism { parent: 0, gain: 1.0 })],
        ExogenousDistribution::gaussian(2),
    )
    .expect("two mechanisms, two noise coordinates");
    let m_prime = TriangularScm::in_order(
        vec![Arc::new(LinearMechanism::noise_only(1.0)), Arc::new(LinearMechanism::noise_only(1.0))],
        ExogenousDistribution::gaussian(2),
    )
    .expect("two mechanisms, two noise coordinates");
    (m, m_prime)
}

/// Orientation field of the first model of [`make_counterexample_pair`].
pub fn counterexample_truth() -> OrientationTruth {
    OrientationTruth::new(vec![Gate::None, Gate::Threshold { w: vec![1.0], tau: 0.0 }])
}
