//! Mechanism trait and a few closed-form mechanisms.

use std::fmt::{self, Debug};
use std::sync::Arc;

use crate::bijection::Bijection;

pub const BISECT_LO: f64 = -50.0;
pub const BISECT_HI: f64 = 50.0;
pub const BISECT_TOL: f64 = 1e-12;
pub const FD_STEP: f64 = 1e-6;

/// One structural equation `v = forward(parents, u)`, strictly monotone in `u` for every context.
///
/// `parents` holds the values of the variables that precede this one in the causal order, in order.
pub trait Mechanism: Send + Sync + Debug {
    fn forward(&self, parents: &[f64], u: f64) -> f64;

    /// Solves `forward(parents, u) = v` for `u`; `None` when no solution is bracketed.
    fn inverse(&self, parents: &[f64], v: f64) -> Option<f64> {
        bisect_inverse(|u| self.forward(parents, u), v)
    }

    /// Derivative of `forward` in `u`.
    fn partial_u(&self, parents: &[f64], u: f64) -> f64 {
        (self.forward(parents, u + FD_STEP) - self.forward(parents, u - FD_STEP)) / (2.0 * FD_STEP)
    }
}

/// Guarded bisection for a strictly monotone `f` on `[-50, 50]`.
pub fn bisect_inverse(f: impl Fn(f64) -> f64, target: f64) -> Option<f64> {
    let (mut lo, mut hi) = (BISECT_LO, BISECT_HI);
    let flo = f(lo) - target;
    let fhi = f(hi) - target;
    if !(flo.is_finite() && fhi.is_finite()) || flo * fhi > 0.0 {
        return None;
    }
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    let increasing = fhi > 0.0;
    for _ in 0..200 {
        if hi - lo <= BISECT_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid) - target;
        if fm == 0.0 {
            return Some(mid);
        }
        if (fm > 0.0) == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// `v = weights . parents + bias + scale * u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMechanism {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub scale: f64,
}

impl LinearMechanism {
    pub fn noise_only(scale: f64) -> Self {
        Self { weights: Vec::new(), bias: 0.0, scale }
    }

    fn shift(&self, parents: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(parents).map(|(w, p)| w * p).sum::<f64>()
    }
}

impl Mechanism for LinearMechanism {
    fn forward(&self, parents: &[f64], u: f64) -> f64 {
        self.shift(parents) + self.scale * u
    }
    fn inverse(&self, parents: &[f64], v: f64) -> Option<f64> {
        Some((v - self.shift(parents)) / self.scale)
    }
    fn partial_u(&self, _parents: &[f64], _u: f64) -> f64 {
        self.scale
    }
}

/// `v = gain * sgn(parents[parent]) * u` with `sgn(0) = +1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignGateMechanism {
    pub parent: usize,
    pub gain: f64,
}

pub fn sgn(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

impl Mechanism for SignGateMechanism {
    fn forward(&self, parents: &[f64], u: f64) -> f64 {
        self.gain * sgn(parents[self.parent]) * u
    }
    fn inverse(&self, parents: &[f64], v: f64) -> Option<f64> {
        Some(v / (self.gain * sgn(parents[self.parent])))
    }
    fn partial_u(&self, parents: &[f64], _u: f64) -> f64 {
        self.gain * sgn(parents[self.parent])
    }
}

/// `f'(c, u') = f(c, map^{-1}(u'))`: the partner mechanism of an exogenous reparametrization.
#[derive(Debug, Clone)]
pub struct Reparametrized {
    pub inner: Arc<dyn Mechanism>,
    pub map: Arc<dyn Bijection>,
}

impl Mechanism for Reparametrized {
    fn forward(&self, parents: &[f64], u: f64) -> f64 {
        self.inner.forward(parents, self.map.inverse(u))
    }
    fn inverse(&self, parents: &[f64], v: f64) -> Option<f64> {
        self.inner.inverse(parents, v).map(|u| self.map.forward(u))
    }
    fn partial_u(&self, parents: &[f64], u: f64) -> f64 {
        let w = self.map.inverse(u);
        self.inner.partial_u(parents, w) / self.map.derivative(w)
    }
}

type ForwardFn = dyn Fn(&[f64], f64) -> f64 + Send + Sync;

/// Mechanism from a closure; inverse by bisection, derivative by central difference.
#[derive(Clone)]
pub struct FnMechanism {
    label: String,
    f: Arc<ForwardFn>,
}

impl FnMechanism {
    pub fn new(label: impl Into<String>, f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), f: Arc::new(f) }
    }
}

impl Debug for FnMechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnMechanism({})", self.label)
    }
}

impl Mechanism for FnMechanism {
    fn forward(&self, parents: &[f64], u: f64) -> f64 {
        (self.f)(parents, u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bijection::CubicMap;

    #[test]
    fn bisection_finds_root_of_increasing_and_decreasing_maps() {
        let u = bisect_inverse(|u| u * u * u + u, 10.0).unwrap();
        assert!((u * u * u + u - 10.0).abs() < 1e-9);
        let u = bisect_inverse(|u| -2.0 * u + 1.0, 3.0).unwrap();
        assert!((u + 1.0).abs() < 1e-11);
    }

    #[test]
    fn bisection_reports_missing_bracket() {
        assert!(bisect_inverse(|u| u.tanh(), 2.0).is_none());
    }

    #[test]
    fn fallback_inverse_and_derivative() {
        let m = FnMechanism::new("cubic", |p: &[f64], u| p[0] + u + 0.1 * u * u * u);
        let u = 1.3;
        let v = m.forward(&[0.5], u);
        assert!((m.inverse(&[0.5], v).unwrap() - u).abs() < 1e-10);
        assert!((m.partial_u(&[0.5], u) - (1.0 + 0.3 * u * u)).abs() < 1e-7);
    }

    #[test]
    fn reparametrized_inverse_is_map_of_inner_inverse() {
        let inner: Arc<dyn Mechanism> = Arc::new(LinearMechanism { weights: vec![1.0], bias: 0.2, scale: 0.7 });
        let map: Arc<dyn Bijection> = Arc::new(CubicMap { a: 1.0, b: 0.5, flip: true });
        let r = Reparametrized { inner: inner.clone(), map: map.clone() };
        let c = [0.4];
        for &u in &[-2.0, -0.3, 0.0, 1.7] {
            let v = inner.forward(&c, u);
            assert!((r.inverse(&c, v).unwrap() - map.forward(u)).abs() < 1e-12);
            assert!((r.forward(&c, map.forward(u)) - v).abs() < 1e-12);
        }
        let fd = (r.forward(&c, 0.3 + 1e-6) - r.forward(&c, 0.3 - 1e-6)) / 2e-6;
        assert!((fd - r.partial_u(&c, 0.3)).abs() < 1e-6);
    }
}
