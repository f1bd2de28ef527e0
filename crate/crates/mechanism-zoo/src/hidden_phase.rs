//! Stick-slip style SCM with a hidden phase variable, and a surrogate that sees only `(X, Y)`.
//!
//! True model: `X = U_X`, `S = 1[U_S <= sigmoid(slope * X)]`, `Y = (2S - 1) * |Y|` with a positive
//! magnitude driven by `U_Y`. The surrogate reads the phase off the sign of the observed `Y` and keeps
//! it under intervention, so it matches the observational law but not the counterfactuals.

use std::sync::Arc;

use rand::Rng as _;
use scm_core::rng::{self, Rng};
use scm_core::{
    ks_critical, ks_statistic, CounterfactualQuery, ExogenousDistribution, Intervention, KsMarginal, LinearMechanism,
    Mechanism, NoiseFamily, TriangularScm,
};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::Result;

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `v = Phi(u)`: the latent phase draw expressed on `(0, 1)`.
#[derive(Debug, Clone, Copy)]
pub struct PhaseCode;

impl Mechanism for PhaseCode {
    fn forward(&self, _parents: &[f64], u: f64) -> f64 {
        Normal::standard().cdf(u)
    }
    fn inverse(&self, _parents: &[f64], v: f64) -> Option<f64> {
        (v > 0.0 && v < 1.0).then(|| Normal::standard().inverse_cdf(v))
    }
    fn partial_u(&self, _parents: &[f64], u: f64) -> f64 {
        Normal::standard().pdf(u)
    }
}

/// `Y = (2 * 1[s <= sigmoid(slope * x)] - 1) * exp(u / 2)` with parents `(x, s)`.
#[derive(Debug, Clone, Copy)]
pub struct PhaseResponse {
    pub slope: f64,
}

impl PhaseResponse {
    fn sign(&self, parents: &[f64]) -> f64 {
        if parents[1] <= logistic(self.slope * parents[0]) {
            1.0
        } else {
            -1.0
        }
    }
}

impl Mechanism for PhaseResponse {
    fn forward(&self, parents: &[f64], u: f64) -> f64 {
        self.sign(parents) * (0.5 * u).exp()
    }
    fn inverse(&self, parents: &[f64], v: f64) -> Option<f64> {
        let m = v * self.sign(parents);
        (m > 0.0).then(|| 2.0 * m.ln())
    }
    fn partial_u(&self, parents: &[f64], u: f64) -> f64 {
        0.5 * self.forward(parents, u)
    }
}

/// Two-segment monotone model of `(X, Y)` with a logistic segment probability.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedSurrogate {
    pub x_mean: f64,
    pub x_sd: f64,
    pub phase_intercept: f64,
    pub phase_slope: f64,
    pub log_mag_mean: f64,
    pub log_mag_sd: f64,
}

impl SegmentedSurrogate {
    /// Moment fits for `X` and `log|Y|`, logistic regression (Newton) for the sign of `Y`.
    pub fn fit(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let sd = |v: &[f64], m: f64| (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt();
        let x_mean = mean(xs);
        let x_sd = sd(xs, x_mean);
        let logs: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
        let log_mag_mean = mean(&logs);
        let log_mag_sd = sd(&logs, log_mag_mean);

        let (mut a, mut b) = (0.0f64, 0.0f64);
        for _ in 0..50 {
            let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 1e-9, 0.0, 1e-9);
            for (&x, &y) in xs.iter().zip(ys) {
                let p = logistic(a + b * x);
                let t = if y > 0.0 { 1.0 } else { 0.0 };
                ga += t - p;
                gb += (t - p) * x;
                let w = p * (1.0 - p);
                haa += w;
                hab += w * x;
                hbb += w * x * x;
            }
            let det = haa * hbb - hab * hab;
            let da = (hbb * ga - hab * gb) / det;
            let db = (haa * gb - hab * ga) / det;
            a += da;
            b += db;
            if da.abs() + db.abs() < 1e-12 * n.max(1.0) {
                break;
            }
        }
        Self { x_mean, x_sd, phase_intercept: a, phase_slope: b, log_mag_mean, log_mag_sd }
    }

    pub fn sample(&self, n: usize, rng: &mut Rng) -> (Vec<f64>, Vec<f64>) {
        let normal = NoiseFamily::Gaussian;
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let x = self.x_mean + self.x_sd * normal.sample(rng);
            let positive = rng.random::<f64>() < logistic(self.phase_intercept + self.phase_slope * x);
            let mag = (self.log_mag_mean + self.log_mag_sd * normal.sample(rng)).exp();
            xs.push(x);
            ys.push(if positive { mag } else { -mag });
        }
        (xs, ys)
    }

    /// The surrogate's answer to `do(X = x_new)` given `(x, y)`: segment and magnitude both persist.
    pub fn counterfactual(&self, _x: f64, y: f64, _x_new: f64) -> f64 {
        y
    }
}

#[derive(Debug, Clone)]
pub struct HiddenPhaseDemo {
    pub slope: f64,
    /// Variables `(X, S, Y)` with `S` the latent phase draw on `(0, 1)`.
    pub scm: TriangularScm,
    pub surrogate: SegmentedSurrogate,
}

pub const HIDDEN_PHASE_FIT_SIZE: usize = 20_000;

pub fn make_hidden_phase_scm(sigma_slope: f64) -> HiddenPhaseDemo {
    let scm = TriangularScm::in_order(
        vec![
            Arc::new(LinearMechanism::noise_only(1.0)) as Arc<dyn Mechanism>,
            Arc::new(PhaseCode),
            Arc::new(PhaseResponse { slope: sigma_slope }),
        ],
        ExogenousDistribution::gaussian(3),
    )
    .expect("three mechanisms, three noise coordinates");
    let (_, vs) =
        scm.sample(HIDDEN_PHASE_FIT_SIZE, &mut rng::stream(0x5EED, "hidden-phase-fit")).expect("closed-form sampling");
    let xs: Vec<f64> = vs.iter().map(|v| v[0]).collect();
    let ys: Vec<f64> = vs.iter().map(|v| v[2]).collect();
    let surrogate = SegmentedSurrogate::fit(&xs, &ys);
    HiddenPhaseDemo { slope: sigma_slope, scm, surrogate }
}

impl HiddenPhaseDemo {
    pub fn sigma(&self, x: f64) -> f64 {
        logistic(self.slope * x)
    }

    /// True counterfactual `Y` under `do(X = x_new)` for the full observation `(x, s, y)`.
    pub fn true_counterfactual(&self, x: f64, s: f64, y: f64, x_new: f64) -> Result<f64> {
        let q = CounterfactualQuery::new(vec![x, s, y], Intervention::single(0, x_new));
        Ok(self.scm.counterfactual(&q)?[2])
    }

    /// KS comparison of the observed coordinates `(X, Y)` between the true model and the surrogate.
    pub fn observed_ks(&self, n: usize, seed: u64) -> Result<(Vec<KsMarginal>, bool)> {
        let (_, vs) = self.scm.sample(n, &mut rng::stream(seed, "hidden-phase-true"))?;
        let (sx, sy) = self.surrogate.sample(n, &mut rng::stream(seed, "hidden-phase-surrogate"));
        let critical = ks_critical(0.01, n, n);
        let marginals: Vec<KsMarginal> = [(0usize, &sx), (2usize, &sy)]
            .into_iter()
            .map(|(j, other)| {
                let own: Vec<f64> = vs.iter().map(|v| v[j]).collect();
                let statistic = ks_statistic(&own, other);
                KsMarginal { statistic, critical, pass: statistic < critical }
            })
            .collect();
        let pass = marginals.iter().all(|m| m.pass);
        Ok((marginals, pass))
    }
}
