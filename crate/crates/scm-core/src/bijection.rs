//! Strictly monotone scalar bijections of the real line, used to reparametrize exogenous coordinates.

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

pub trait Bijection: Send + Sync + Debug {
    fn name(&self) -> String;
    fn forward(&self, u: f64) -> f64;
    fn inverse(&self, y: f64) -> f64;
    /// Derivative of `forward` at `u`.
    fn derivative(&self, u: f64) -> f64;
}

/// `u -> scale * u + offset`, scale nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub scale: f64,
    pub offset: f64,
}

impl Bijection for AffineMap {
    fn name(&self) -> String {
        format!("affine({}, {})", self.scale, self.offset)
    }
    fn forward(&self, u: f64) -> f64 {
        self.scale * u + self.offset
    }
    fn inverse(&self, y: f64) -> f64 {
        (y - self.offset) / self.scale
    }
    fn derivative(&self, _u: f64) -> f64 {
        self.scale
    }
}

/// `u -> sign * (a*u + b*u^3)` with a > 0, b >= 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicMap {
    pub a: f64,
    pub b: f64,
    pub flip: bool,
}

impl CubicMap {
    fn sign(&self) -> f64 {
        if self.flip {
            -1.0
        } else {
            1.0
        }
    }
}

impl Bijection for CubicMap {
    fn name(&self) -> String {
        format!("cubic({}, {}, flip={})", self.a, self.b, self.flip)
    }
    fn forward(&self, u: f64) -> f64 {
        self.sign() * (self.a * u + self.b * u * u * u)
    }
    fn inverse(&self, y: f64) -> f64 {
        let y = self.sign() * y;
        if self.b == 0.0 {
            return y / self.a;
        }
        // Cardano for u^3 + p u - q = 0 (single real root since p > 0), then Newton polish.
        let p = self.a / self.b;
        let q = y / self.b;
        let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        let mut u = (q / 2.0 + disc).cbrt() + (q / 2.0 - disc).cbrt();
        for _ in 0..3 {
            let f = self.a * u + self.b * u * u * u - y;
            let df = self.a + 3.0 * self.b * u * u;
            u -= f / df;
        }
        u
    }
    fn derivative(&self, u: f64) -> f64 {
        self.sign() * (self.a + 3.0 * self.b * u * u)
    }
}

/// `u -> sign * c * sinh(a*u)` with a, c > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinhMap {
    pub a: f64,
    pub c: f64,
    pub flip: bool,
}

impl SinhMap {
    fn sign(&self) -> f64 {
        if self.flip {
            -1.0
        } else {
            1.0
        }
    }
}

impl Bijection for SinhMap {
    fn name(&self) -> String {
        format!("sinh({}, {}, flip={})", self.a, self.c, self.flip)
    }
    fn forward(&self, u: f64) -> f64 {
        self.sign() * self.c * (self.a * u).sinh()
    }
    fn inverse(&self, y: f64) -> f64 {
        (self.sign() * y / self.c).asinh() / self.a
    }
    fn derivative(&self, u: f64) -> f64 {
        self.sign() * self.c * self.a * (self.a * u).cosh()
    }
}
