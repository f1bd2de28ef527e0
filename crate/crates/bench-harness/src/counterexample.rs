//! The sign-gated pair that agrees observationally but not counterfactually, exogenously
//! isomorphic control pairs, and the hidden-phase surrogate.

use mechanism_zoo::{make_counterexample_pair, make_hidden_phase_scm, random_ei_pair};
use rand::Rng as _;
use scm_core::{
    observational_equivalence_check, rng, transport_variation, CounterfactualQuery, EquivalenceReport, Intervention,
    TriangularScm,
};
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const KS_SAMPLES: usize = 10_000;
pub const KS_SEED: u64 = 2024;
pub const U_GRID: [f64; 9] = [-1.5, -1.125, -0.75, -0.375, 0.0, 0.375, 0.75, 1.125, 1.5];

/// One factual/intervention row of the counterfactual table for the sign-gated pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfRow {
    pub x: f64,
    pub y: f64,
    pub do_x: f64,
    pub m_x: f64,
    pub m_y: f64,
    pub m_prime_x: f64,
    pub m_prime_y: f64,
    pub disagreement: f64,
}

pub fn counterfactual_row(m: &TriangularScm, mp: &TriangularScm, x: f64, y: f64, do_x: f64) -> Result<CfRow> {
    let q = CounterfactualQuery::new(vec![x, y], Intervention::single(0, do_x));
    let a = m.counterfactual(&q)?;
    let b = mp.counterfactual(&q)?;
    Ok(CfRow {
        x,
        y,
        do_x,
        m_x: a[0],
        m_y: a[1],
        m_prime_x: b[0],
        m_prime_y: b[1],
        disagreement: (a[1] - b[1]).abs().max((a[0] - b[0]).abs()),
    })
}

/// The factual grid: `(1, 0.7)` first, then a few points on both sides of the gate.
pub fn counterfactual_table() -> Result<Vec<CfRow>> {
    let (m, mp) = make_counterexample_pair();
    let mut rows = vec![counterfactual_row(&m, &mp, 1.0, 0.7, -1.0)?];
    for &(x, y) in &[(1.0, 0.7), (-1.0, 0.7), (0.5, -1.3), (-2.0, 0.4)] {
        for &do_x in &[-1.0, 1.0, 2.0] {
            if (x, y, do_x) != (1.0, 0.7, -1.0) {
                rows.push(counterfactual_row(&m, &mp, x, y, do_x)?);
            }
        }
    }
    Ok(rows)
}

pub fn equivalence() -> Result<EquivalenceReport> {
    let (m, mp) = make_counterexample_pair();
    Ok(observational_equivalence_check(&m, &mp, KS_SAMPLES, KS_SEED)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub label: String,
    /// Largest transport variation over mechanisms.
    pub transport_variation: f64,
    /// Largest absolute counterfactual difference over the queries.
    pub cf_disagreement: f64,
    pub queries: usize,
}

/// Transport variation on contexts drawn from `a`, and counterfactual disagreement on `queries`
/// random single-coordinate interventions.
pub fn pair_check(label: &str, a: &TriangularScm, b: &TriangularScm, queries: usize, seed: u64) -> Result<PairCheck> {
    let d = a.d();
    let (_, vs) = a.sample(64, &mut rng::stream(seed, "pair-contexts"))?;
    let mut tv: f64 = 0.0;
    for i in 0..d {
        let contexts: Vec<Vec<f64>> = vs.iter().map(|v| a.context(v, i)).collect();
        tv = tv.max(transport_variation(a, b, i, &contexts, &U_GRID)?);
    }
    let mut r = rng::stream(seed, "pair-queries");
    let (_, factuals) = a.sample(queries, &mut r)?;
    let (_, donors) = a.sample(queries, &mut r)?;
    let mut worst: f64 = 0.0;
    for (f, donor) in factuals.into_iter().zip(donors) {
        let target = r.random_range(0..d);
        let q = CounterfactualQuery::new(f, Intervention::single(target, donor[target]));
        let (ca, cb) = (a.counterfactual(&q)?, b.counterfactual(&q)?);
        for (x, y) in ca.iter().zip(&cb) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(PairCheck { label: label.into(), transport_variation: tv, cf_disagreement: worst, queries })
}

pub fn sign_pair_check(queries: usize, seed: u64) -> Result<PairCheck> {
    let (m, mp) = make_counterexample_pair();
    pair_check("sign-gated pair", &m, &mp, queries, seed)
}

/// `pairs` random zoo models against their coordinate-wise reparametrizations.
pub fn ei_suite(pairs: usize, queries: usize, seed: u64) -> Result<Vec<PairCheck>> {
    (0..pairs)
        .map(|k| {
            let s = rng::derive_seed(seed, k as u64);
            let (a, b) = random_ei_pair(s)?;
            pair_check(&format!("isomorphic pair {k} (d={})", a.d()), &a, &b, queries, s)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenPhaseRow {
    pub x: f64,
    pub s: f64,
    pub y: f64,
    pub do_x: f64,
    pub true_cf: f64,
    pub surrogate_cf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenPhaseSummary {
    pub slope: f64,
    pub ks_statistics: Vec<f64>,
    pub ks_critical: f64,
    pub ks_pass: bool,
    pub rows: Vec<HiddenPhaseRow>,
}

pub const HIDDEN_PHASE_SLOPE: f64 = 1.5;

pub fn hidden_phase() -> Result<HiddenPhaseSummary> {
    let demo = make_hidden_phase_scm(HIDDEN_PHASE_SLOPE);
    let (marginals, pass) = demo.observed_ks(KS_SAMPLES, KS_SEED)?;
    let mut rows = Vec::new();
    for &(x, s, y) in &[(1.0, 0.4, 1.2), (1.0, 0.9, -0.8), (-1.0, 0.1, 0.9), (-1.0, 0.6, -1.1)] {
        for &do_x in &[-2.0, 2.0] {
            rows.push(HiddenPhaseRow {
                x,
                s,
                y,
                do_x,
                true_cf: demo.true_counterfactual(x, s, y, do_x)?,
                surrogate_cf: demo.surrogate.counterfactual(x, y, do_x),
            });
        }
    }
    Ok(HiddenPhaseSummary {
        slope: HIDDEN_PHASE_SLOPE,
        ks_statistics: marginals.iter().map(|m| m.statistic).collect(),
        ks_critical: marginals.first().map_or(0.0, |m| m.critical),
        ks_pass: pass,
        rows,
    })
}
