use rand_distr::{Distribution, StandardNormal, Uniform};
use scm_core::rng;
use serde::{Deserialize, Serialize};

pub const N_PROJECTIONS: usize = 8;
pub const INPUT_CLIP: f64 = 5.0;

/// Conditioning basis over `k` parent values: constant, linear and degree-2 monomials, and
/// `tanh` of 8 random projections; inputs are clipped to `[-5, 5]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    k: usize,
    /// `N_PROJECTIONS x k`, row-major.
    proj: Vec<f64>,
    bias: Vec<f64>,
}

impl FeatureMap {
    pub fn new(k: usize, seed: u64) -> Self {
        let mut r = rng::stream(seed, "feature-projections");
        let norm = 1.0 / (k.max(1) as f64).sqrt();
        let proj = if k == 0 {
            Vec::new()
        } else {
            (0..N_PROJECTIONS * k)
                .map(|_| norm * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut r))
                .collect()
        };
        let unif = Uniform::new(-1.0, 1.0).expect("valid range");
        let bias = if k == 0 { Vec::new() } else { (0..N_PROJECTIONS).map(|_| unif.sample(&mut r)).collect() };
        Self { k, proj, bias }
    }

    pub fn inputs(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        if self.k == 0 {
            1
        } else {
            1 + self.k + self.k * (self.k + 1) / 2 + N_PROJECTIONS
        }
    }

    pub fn eval_into(&self, context: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(context.len(), self.k);
        out.clear();
        out.push(1.0);
        if self.k == 0 {
            return;
        }
        let c: Vec<f64> = context.iter().map(|x| x.clamp(-INPUT_CLIP, INPUT_CLIP)).collect();
        out.extend_from_slice(&c);
        for a in 0..self.k {
            for b in a..self.k {
                out.push(c[a] * c[b]);
            }
        }
        for j in 0..N_PROJECTIONS {
            let row = &self.proj[j * self.k..(j + 1) * self.k];
            let z: f64 = row.iter().zip(&c).map(|(w, x)| w * x).sum::<f64>() + self.bias[j];
            out.push(z.tanh());
        }
    }

    pub fn eval(&self, context: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        self.eval_into(context, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        assert_eq!(FeatureMap::new(0, 1).dim(), 1);
        assert_eq!(FeatureMap::new(2, 1).dim(), 1 + 2 + 3 + 8);
        assert_eq!(FeatureMap::new(2, 1).eval(&[0.5, -1.0]).len(), 14);
    }

    #[test]
    fn deterministic_and_bounded() {
        let a = FeatureMap::new(3, 9);
        assert_eq!(a, FeatureMap::new(3, 9));
        assert_ne!(a, FeatureMap::new(3, 10));
        let f = a.eval(&[1e6, -1e6, 3.0]);
        assert!(f.iter().all(|x| x.abs() <= 25.0));
        assert_eq!(f[1], 5.0);
        assert_eq!(f[2], -5.0);
    }
}
