//! Monotone scalar flow with a piecewise-linear derivative.
//!
//! `Q'(u) = sum_j k_j h_j(u)` over hat functions centred on 8 knots spanning `[-4, 4]`; the end
//! hats extend as constants so the tails are linear. `Q(0) = 0`, so unit slopes give the identity.

use serde::{Deserialize, Serialize};

pub const N_KNOTS: usize = 8;
pub const KNOT_LO: f64 = -4.0;
pub const KNOT_HI: f64 = 4.0;
pub const SLOPE_FLOOR: f64 = 1e-3;
/// Log-increments are clamped here before exponentiation.
pub const LOG_CLAMP: f64 = 40.0;

pub const KNOT_SPACING: f64 = (KNOT_HI - KNOT_LO) / (N_KNOTS as f64 - 1.0);

pub type Knots = [f64; N_KNOTS];

pub fn knot(j: usize) -> f64 {
    KNOT_LO + j as f64 * KNOT_SPACING
}

/// Slope `k = floor + (1 - floor) e^a` and its derivative in `a` (zero where clamped).
pub fn slope_from_log(a: f64) -> (f64, f64) {
    let clamped = a.clamp(-LOG_CLAMP, LOG_CLAMP);
    let e = (1.0 - SLOPE_FLOOR) * clamped.exp();
    let grad = if a.abs() > LOG_CLAMP { 0.0 } else { e };
    (SLOPE_FLOOR + e, grad)
}

/// Inverse of [`slope_from_log`] for `k > SLOPE_FLOOR`.
pub fn log_from_slope(k: f64) -> f64 {
    ((k - SLOPE_FLOOR) / (1.0 - SLOPE_FLOOR)).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneFlow {
    slopes: Knots,
    /// `F(knot j)` with `F(knot 0) = 0`.
    cum: Knots,
    /// `F(0)`, subtracted so that `Q(0) = 0`.
    origin: f64,
}

impl MonotoneFlow {
    pub fn from_slopes(slopes: Knots) -> Self {
        debug_assert!(slopes.iter().all(|k| *k > 0.0 && k.is_finite()));
        let mut cum = [0.0; N_KNOTS];
        for j in 1..N_KNOTS {
            cum[j] = cum[j - 1] + 0.5 * KNOT_SPACING * (slopes[j - 1] + slopes[j]);
        }
        let mut flow = Self { slopes, cum, origin: 0.0 };
        flow.origin = flow.raw(0.0);
        flow
    }

    pub fn from_log_increments(a: &Knots) -> Self {
        Self::from_slopes(a.map(|x| slope_from_log(x).0))
    }

    pub fn identity() -> Self {
        Self::from_slopes([1.0; N_KNOTS])
    }

    pub fn slopes(&self) -> &Knots {
        &self.slopes
    }

    /// Segment index and offset from its left knot; `None` for the tails.
    fn segment(u: f64) -> Option<(usize, f64)> {
        if !(KNOT_LO..KNOT_HI).contains(&u) {
            return None;
        }
        let j = (((u - KNOT_LO) / KNOT_SPACING) as usize).min(N_KNOTS - 2);
        Some((j, u - knot(j)))
    }

    fn raw(&self, u: f64) -> f64 {
        let k = &self.slopes;
        if u < KNOT_LO {
            return k[0] * (u - KNOT_LO);
        }
        match Self::segment(u) {
            Some((j, t)) => self.cum[j] + k[j] * t + (k[j + 1] - k[j]) * t * t / (2.0 * KNOT_SPACING),
            None => self.cum[N_KNOTS - 1] + k[N_KNOTS - 1] * (u - KNOT_HI),
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.raw(u) - self.origin
    }

    pub fn derivative(&self, u: f64) -> f64 {
        let k = &self.slopes;
        if u < KNOT_LO {
            return k[0];
        }
        match Self::segment(u) {
            Some((j, t)) => k[j] + (k[j + 1] - k[j]) * t / KNOT_SPACING,
            None => k[N_KNOTS - 1],
        }
    }

    pub fn second_derivative(&self, u: f64) -> f64 {
        match Self::segment(u) {
            Some((j, _)) => (self.slopes[j + 1] - self.slopes[j]) / KNOT_SPACING,
            None => 0.0,
        }
    }

    /// Exact inverse: segment search on the knot values, then the stable quadratic root.
    pub fn inverse(&self, y: f64) -> f64 {
        let k = &self.slopes;
        let target = y + self.origin;
        if target < 0.0 {
            return KNOT_LO + target / k[0];
        }
        let last = N_KNOTS - 1;
        if target >= self.cum[last] {
            return KNOT_HI + (target - self.cum[last]) / k[last];
        }
        let j = self.cum.partition_point(|c| *c <= target).saturating_sub(1).min(last - 1);
        let rem = target - self.cum[j];
        let alpha = (k[j + 1] - k[j]) / (2.0 * KNOT_SPACING);
        let disc = (k[j] * k[j] + 4.0 * alpha * rem).max(0.0);
        let t = 2.0 * rem / (k[j] + disc.sqrt());
        knot(j) + t.clamp(0.0, KNOT_SPACING)
    }

    /// Hat basis values `h_j(u)`, so that `Q'(u) = sum_j k_j h_j(u)`.
    pub fn hats(u: f64) -> Knots {
        let mut h = [0.0; N_KNOTS];
        if u < KNOT_LO {
            h[0] = 1.0;
        } else if let Some((j, t)) = Self::segment(u) {
            let r = t / KNOT_SPACING;
            h[j] = 1.0 - r;
            h[j + 1] = r;
        } else {
            h[N_KNOTS - 1] = 1.0;
        }
        h
    }

    /// Derivatives `h_j'(u)`, so that `Q''(u) = sum_j k_j h_j'(u)`.
    pub fn hat_slopes(u: f64) -> Knots {
        let mut h = [0.0; N_KNOTS];
        if let Some((j, _)) = Self::segment(u) {
            h[j] = -1.0 / KNOT_SPACING;
            h[j + 1] = 1.0 / KNOT_SPACING;
        }
        h
    }

    /// `I_j(u) = int_0^u h_j`, so that `Q(u) = sum_j k_j I_j(u)`.
    pub fn basis_integrals(u: f64) -> Knots {
        let a = antiderivatives(u);
        let z = antiderivatives(0.0);
        std::array::from_fn(|j| a[j] - z[j])
    }
}

/// `B_j(u) = int_{KNOT_LO}^u h_j`, extended below `KNOT_LO` by the constant end hat.
fn antiderivatives(u: f64) -> Knots {
    let l = KNOT_SPACING;
    let rising = |x: f64, lo: f64, c: f64| {
        let a = x.clamp(lo, c) - lo;
        a * a / (2.0 * l)
    };
    let falling = |x: f64, c: f64| {
        let b = x.clamp(c, c + l) - c;
        b - b * b / (2.0 * l)
    };
    let mut out = [0.0; N_KNOTS];
    for (j, slot) in out.iter_mut().enumerate() {
        let c = knot(j);
        *slot = if j == 0 {
            if u < c {
                u - c
            } else {
                falling(u, c)
            }
        } else if j == N_KNOTS - 1 {
            rising(u, c - l, c) + (u - c).max(0.0)
        } else {
            rising(u, c - l, c) + falling(u, c)
        };
    }
    out
}
