//! Standardized exogenous noise families and per-coordinate exogenous laws.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::bijection::Bijection;
use crate::error::ScmError;
use crate::rng::Rng;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;
const MIX_SCALE: f64 = 1.118_033_988_749_895; // sqrt(1.25)
const T_DF: f64 = 5.0;

/// Noise families, each with mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    Gaussian,
    /// Exp(1) - 1.
    Skewed,
    /// 0.5 N(-1, 0.5^2) + 0.5 N(1, 0.5^2), divided by sqrt(1.25).
    Mixture,
    /// Student t with 5 degrees of freedom, times sqrt(3/5).
    StudentT,
}

impl NoiseFamily {
    pub const ALL: [NoiseFamily; 4] =
        [NoiseFamily::Gaussian, NoiseFamily::Skewed, NoiseFamily::Mixture, NoiseFamily::StudentT];

    pub fn tag(self) -> &'static str {
        match self {
            NoiseFamily::Gaussian => "gaussian",
            NoiseFamily::Skewed => "skewed",
            NoiseFamily::Mixture => "mixture",
            NoiseFamily::StudentT => "student_t",
        }
    }

    pub fn sample(self, rng: &mut Rng) -> f64 {
        match self {
            NoiseFamily::Gaussian => StandardNormal.sample(rng),
            NoiseFamily::Skewed => {
                let e: f64 = Exp1.sample(rng);
                e - 1.0
            }
            NoiseFamily::Mixture => {
                let centre = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let z: f64 = StandardNormal.sample(rng);
                (centre + 0.5 * z) / MIX_SCALE
            }
            NoiseFamily::StudentT => {
                let t = StudentT::new(T_DF).expect("valid degrees of freedom");
                t.sample(rng) * (3.0f64 / 5.0).sqrt()
            }
        }
    }

    pub fn log_density(self, x: f64) -> f64 {
        match self {
            NoiseFamily::Gaussian => -0.5 * x * x - LN_SQRT_2PI,
            NoiseFamily::Skewed => {
                if x >= -1.0 {
                    -(x + 1.0)
                } else {
                    f64::NEG_INFINITY
                }
            }
            NoiseFamily::Mixture => {
                let z = x * MIX_SCALE;
                let s = 0.5;
                let a = -0.5 * ((z + 1.0) / s).powi(2);
                let b = -0.5 * ((z - 1.0) / s).powi(2);
                let hi = a.max(b);
                let lse = hi + ((a - hi).exp() + (b - hi).exp()).ln();
                (0.5f64).ln() + lse - s.ln() - LN_SQRT_2PI + MIX_SCALE.ln()
            }
            NoiseFamily::StudentT => {
                let scale = (3.0f64 / 5.0).sqrt();
                let t = x / scale;
                let nu = T_DF;
                ln_gamma((nu + 1.0) / 2.0)
                    - ln_gamma(nu / 2.0)
                    - 0.5 * (nu * PI).ln()
                    - (nu + 1.0) / 2.0 * (1.0 + t * t / nu).ln()
                    - scale.ln()
            }
        }
    }
}

impl fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for NoiseFamily {
    type Err = ScmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NoiseFamily::ALL
            .into_iter()
            .find(|f| f.tag() == s)
            .ok_or_else(|| ScmError::Invalid(format!("unknown noise family '{s}'")))
    }
}

/// Law of one exogenous coordinate: a standard family, or a family pushed through a bijection.
#[derive(Clone)]
pub enum Noise {
    Standard(NoiseFamily),
    Pushforward { base: NoiseFamily, map: Arc<dyn Bijection> },
}

impl fmt::Debug for Noise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Noise::Standard(fam) => write!(f, "Standard({fam})"),
            Noise::Pushforward { base, map } => write!(f, "Pushforward({base}, {})", map.name()),
        }
    }
}

impl Noise {
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match self {
            Noise::Standard(fam) => fam.sample(rng),
            Noise::Pushforward { base, map } => map.forward(base.sample(rng)),
        }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        match self {
            Noise::Standard(fam) => fam.log_density(x),
            Noise::Pushforward { base, map } => {
                let u = map.inverse(x);
                base.log_density(u) - map.derivative(u).abs().ln()
            }
        }
    }

    pub fn family(&self) -> NoiseFamily {
        match self {
            Noise::Standard(fam) => *fam,
            Noise::Pushforward { base, .. } => *base,
        }
    }
}

/// Product law over the d exogenous coordinates.
#[derive(Debug, Clone)]
pub struct ExogenousDistribution {
    coords: Vec<Noise>,
}

impl ExogenousDistribution {
    pub fn new(coords: Vec<Noise>) -> Self {
        Self { coords }
    }

    pub fn iid(family: NoiseFamily, d: usize) -> Self {
        Self::new(vec![Noise::Standard(family); d])
    }

    pub fn gaussian(d: usize) -> Self {
        Self::iid(NoiseFamily::Gaussian, d)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coord(&self, i: usize) -> &Noise {
        &self.coords[i]
    }

    pub fn coords(&self) -> &[Noise] {
        &self.coords
    }

    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        self.coords.iter().map(|c| c.sample(rng)).collect()
    }

    pub fn log_density(&self, u: &[f64]) -> f64 {
        self.coords.iter().zip(u).map(|(c, &x)| c.log_density(x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        (0..n).map(|k| f(lo + (k as f64 + 0.5) * h) * h).sum()
    }

    #[test]
    fn densities_integrate_to_one() {
        for fam in NoiseFamily::ALL {
            let mass = integrate(|x| fam.log_density(x).exp(), -40.0, 40.0, 400_000);
            assert!((mass - 1.0).abs() < 1e-3, "{fam}: {mass}");
        }
    }

    #[test]
    fn densities_are_standardized() {
        for fam in NoiseFamily::ALL {
            let mean = integrate(|x| x * fam.log_density(x).exp(), -60.0, 60.0, 600_000);
            let var = integrate(|x| x * x * fam.log_density(x).exp(), -60.0, 60.0, 600_000);
            assert!(mean.abs() < 1e-3, "{fam} mean {mean}");
            assert!((var - 1.0).abs() < 5e-3, "{fam} var {var}");
        }
    }

    #[test]
    fn sample_moments() {
        for fam in NoiseFamily::ALL {
            let mut rng = seeded(11);
            let xs: Vec<f64> = (0..100_000).map(|_| fam.sample(&mut rng)).collect();
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            assert!(mean.abs() < 0.05, "{fam} mean {mean}");
            assert!((var - 1.0).abs() < 0.1, "{fam} var {var}");
        }
    }

    #[test]
    fn gaussian_log_density_at_zero() {
        let v = NoiseFamily::Gaussian.log_density(0.0);
        assert!((v + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
    }

    #[test]
    fn tags_round_trip() {
        for fam in NoiseFamily::ALL {
            assert_eq!(fam.tag().parse::<NoiseFamily>().unwrap(), fam);
        }
        assert!("cauchy".parse::<NoiseFamily>().is_err());
    }
}
