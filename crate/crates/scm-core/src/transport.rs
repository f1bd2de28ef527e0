//! Cross-model diagnostics: inverse transport, its context variation, exogenous
//! reparametrizations and the two-sample KS equivalence check.

use std::sync::Arc;

use serde::Serialize;

use crate::bijection::Bijection;
use crate::error::{Result, ScmError};
use crate::mechanism::{Mechanism, Reparametrized};
use crate::noise::{ExogenousDistribution, Noise};
use crate::rng;
use crate::scm::TriangularScm;

fn check_compatible(a: &TriangularScm, b: &TriangularScm) -> Result<()> {
    if a.d() != b.d() || a.order() != b.order() {
        return Err(ScmError::Incompatible("models differ in dimension or causal order".into()));
    }
    Ok(())
}

/// `b_i(context, .)^{-1}( a_i(context, u) )` for variable `i`.
pub fn inverse_transport(a: &TriangularScm, b: &TriangularScm, i: usize, context: &[f64], u: f64) -> Result<f64> {
    check_compatible(a, b)?;
    let v = a.mechanism(i).forward(context, u);
    b.mechanism(i).inverse(context, v).ok_or(ScmError::Inversion { index: i, target: v })
}

/// Largest spread, over contexts, of the inverse transport at any probe point `u`.
pub fn transport_variation(
    a: &TriangularScm,
    b: &TriangularScm,
    i: usize,
    contexts: &[Vec<f64>],
    u_grid: &[f64],
) -> Result<f64> {
    if contexts.len() < 2 || u_grid.len() < 2 {
        // Single-context probes are allowed for roots, where the spread is trivially zero.
        if contexts.is_empty() || u_grid.is_empty() {
            return Err(ScmError::Invalid("need at least one context and one grid point".into()));
        }
    }
    let mut worst: f64 = 0.0;
    for &u in u_grid {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in contexts {
            let t = inverse_transport(a, b, i, c, u)?;
            lo = lo.min(t);
            hi = hi.max(t);
        }
        worst = worst.max(hi - lo);
    }
    Ok(worst)
}

/// The partner of `scm` under the coordinate-wise exogenous reparametrization `u'_i = maps[i](u_i)`.
///
/// Mechanisms become `f_i(c, maps[i]^{-1}(u'))` and each noise coordinate is pushed forward, so the two
/// models are exogenously isomorphic by construction.
pub fn reparametrize(scm: &TriangularScm, maps: Vec<Arc<dyn Bijection>>) -> Result<TriangularScm> {
    if maps.len() != scm.d() {
        return Err(ScmError::Dimension { expected: scm.d(), got: maps.len() });
    }
    let mut mechanisms: Vec<Arc<dyn Mechanism>> = Vec::with_capacity(scm.d());
    let mut coords = Vec::with_capacity(scm.d());
    for (var, map) in maps.into_iter().enumerate() {
        mechanisms.push(Arc::new(Reparametrized { inner: scm.mechanism(var).clone(), map: map.clone() }));
        let base = match scm.noise().coord(var) {
            Noise::Standard(fam) => *fam,
            Noise::Pushforward { .. } => {
                return Err(ScmError::Invalid("reparametrizing an already reparametrized coordinate".into()))
            }
        };
        coords.push(Noise::Pushforward { base, map });
    }
    TriangularScm::new(scm.order().clone(), mechanisms, ExogenousDistribution::new(coords))
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(x: &[f64], y: &[f64]) -> f64 {
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic critical value `c(alpha) * sqrt((n+m)/(n*m))` with `c(alpha) = sqrt(-ln(alpha/2)/2)`.
pub fn ks_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    let (n, m) = (n as f64, m as f64);
    c * ((n + m) / (n * m)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsMarginal {
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub ks_marginals: Vec<KsMarginal>,
    pub alpha: f64,
    pub n: usize,
    pub pass: bool,
}

pub const KS_ALPHA: f64 = 0.01;

/// Per-coordinate KS comparison of `n` draws from each model.
///
/// Both models are driven by the same exogenous stream (paired draws), so identical models always pass.
pub fn observational_equivalence_check(
    a: &TriangularScm,
    b: &TriangularScm,
    n: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    check_compatible(a, b)?;
    if n < 1000 {
        return Err(ScmError::Invalid(format!("need n >= 1000 samples, got {n}")));
    }
    let (_, va) = a.sample(n, &mut rng::stream(seed, "equivalence"))?;
    let (_, vb) = b.sample(n, &mut rng::stream(seed, "equivalence"))?;
    let critical = ks_critical(KS_ALPHA, n, n);
    let ks_marginals: Vec<KsMarginal> = (0..a.d())
        .map(|j| {
            let xa: Vec<f64> = va.iter().map(|r| r[j]).collect();
            let xb: Vec<f64> = vb.iter().map(|r| r[j]).collect();
            let statistic = ks_statistic(&xa, &xb);
            KsMarginal { statistic, critical, pass: statistic < critical }
        })
        .collect();
    let pass = ks_marginals.iter().all(|k| k.pass);
    Ok(EquivalenceReport { ks_marginals, alpha: KS_ALPHA, n, pass })
}
