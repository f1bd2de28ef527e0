//! Aggregates and paired tests computed from records alone.

use serde::Serialize;
use stats_kit::{bootstrap_mean_ci, spearman, wilcoxon_signed_rank, TestResult};

use crate::records::{BridgeRecord, SweepRecord, MODELS};

pub const BOOTSTRAP_RESAMPLES: usize = 10_000;
pub const BOOTSTRAP_LEVEL: f64 = 0.95;
pub const BOOTSTRAP_SEED: u64 = 7;
pub const FLIP_FAMILIES: [&str; 2] = ["threshold_flip", "smooth_flip"];
pub const COMPARED_BASELINES: [&str; 2] = ["tm_scm", "contextual_flow"];

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub family: String,
    pub model: String,
    pub runs: usize,
    pub failed: usize,
    pub mean_cf_mse: Option<f64>,
    pub mean_latent_error: Option<f64>,
    pub mean_direction_accuracy: Option<f64>,
}

/// Families in first-appearance order.
pub fn families(records: &[SweepRecord]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for r in records {
        if !out.contains(&r.family) {
            out.push(r.family.clone());
        }
    }
    out
}

pub fn summarize(records: &[SweepRecord]) -> Vec<ModelSummary> {
    let mut out = Vec::new();
    for family in families(records) {
        for model in MODELS {
            let rows: Vec<&SweepRecord> = records.iter().filter(|r| r.family == family && r.model == model).collect();
            if rows.is_empty() {
                continue;
            }
            let ok: Vec<&&SweepRecord> = rows.iter().filter(|r| r.ok()).collect();
            let col = |f: fn(&SweepRecord) -> Option<f64>| mean(&ok.iter().filter_map(|r| f(r)).collect::<Vec<_>>());
            out.push(ModelSummary {
                family: family.clone(),
                model: model.into(),
                runs: rows.len(),
                failed: rows.len() - ok.len(),
                mean_cf_mse: col(|r| r.cf_mse),
                mean_latent_error: col(|r| r.latent_error),
                mean_direction_accuracy: col(|r| r.direction_accuracy),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub family: String,
    pub baseline: String,
    pub pairs: usize,
    pub mean_ours: f64,
    pub mean_baseline: f64,
    /// `mean_ours / mean_baseline`.
    pub ratio: f64,
    /// Two-sided paired test on `ours - baseline`; `None` with fewer than 5 non-zero differences.
    pub wilcoxon: Option<TestResult>,
    pub ci: Option<(f64, f64)>,
}

/// `(ours, baseline)` cf_mse pairs matched on configuration index.
pub fn matched_pairs(records: &[SweepRecord], family: &str, baseline: &str) -> Vec<(f64, f64)> {
    let find = |idx: usize, model: &str| {
        records.iter().find(|r| r.config_index == idx && r.model == model && r.ok()).and_then(|r| r.cf_mse)
    };
    records
        .iter()
        .filter(|r| r.family == family && r.model == "ours")
        .filter_map(|r| Some((r.cf_mse.filter(|_| r.ok())?, find(r.config_index, baseline)?)))
        .collect()
}

pub fn compare(records: &[SweepRecord], family: &str, baseline: &str) -> Option<Comparison> {
    let pairs = matched_pairs(records, family, baseline);
    if pairs.is_empty() {
        return None;
    }
    let ours: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let base: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
    let (mean_ours, mean_baseline) = (mean(&ours)?, mean(&base)?);
    Some(Comparison {
        family: family.into(),
        baseline: baseline.into(),
        pairs: pairs.len(),
        mean_ours,
        mean_baseline,
        ratio: mean_ours / mean_baseline,
        wilcoxon: wilcoxon_signed_rank(&diffs).ok(),
        ci: bootstrap_mean_ci(&diffs, BOOTSTRAP_RESAMPLES, BOOTSTRAP_LEVEL, BOOTSTRAP_SEED).ok(),
    })
}

/// Ours against each compared baseline on every flip family present.
pub fn comparisons(records: &[SweepRecord]) -> Vec<Comparison> {
    let present = families(records);
    FLIP_FAMILIES
        .iter()
        .filter(|f| present.iter().any(|p| p == *f))
        .flat_map(|f| COMPARED_BASELINES.iter().filter_map(move |b| compare(records, f, b)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrengthSummary {
    pub strength: f64,
    pub runs: usize,
    pub mean_nms: f64,
    pub mean_gain: f64,
    pub mean_ours: f64,
    pub mean_tmscm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeSummary {
    pub runs: usize,
    pub failed: usize,
    /// Least-squares fit `gain = intercept + slope * nms`.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub spearman: Option<(f64, f64)>,
    pub max_calibration_error: Option<f64>,
    pub per_strength: Vec<StrengthSummary>,
}

pub fn least_squares(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let (mx, my) = (mean(x)?, mean(y)?);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

pub fn summarize_bridge(records: &[BridgeRecord]) -> BridgeSummary {
    let ok: Vec<&BridgeRecord> = records.iter().filter(|r| r.ok()).collect();
    let nms: Vec<f64> = ok.iter().filter_map(|r| r.nms_synth).collect();
    let gain: Vec<f64> = ok.iter().filter_map(|r| r.gain).collect();
    let fit = if nms.len() == gain.len() { least_squares(&nms, &gain) } else { None };
    let mut strengths: Vec<f64> = Vec::new();
    for r in records {
        if !strengths.contains(&r.strength) {
            strengths.push(r.strength);
        }
    }
    let per_strength = strengths
        .iter()
        .filter_map(|&s| {
            let rows: Vec<&&BridgeRecord> = ok.iter().filter(|r| r.strength == s).collect();
            let col = |f: fn(&BridgeRecord) -> Option<f64>| mean(&rows.iter().filter_map(|r| f(r)).collect::<Vec<_>>());
            Some(StrengthSummary {
                strength: s,
                runs: rows.len(),
                mean_nms: col(|r| r.nms_synth)?,
                mean_gain: col(|r| r.gain)?,
                mean_ours: col(|r| r.ours_cf_mse)?,
                mean_tmscm: col(|r| r.tmscm_cf_mse)?,
            })
        })
        .collect();
    BridgeSummary {
        runs: records.len(),
        failed: records.len() - ok.len(),
        intercept: fit.map(|f| f.0),
        slope: fit.map(|f| f.1),
        spearman: spearman(&gain, &nms).ok(),
        max_calibration_error: ok
            .iter()
            .filter_map(|r| r.nms_synth.map(|n| (n - r.strength).abs()))
            .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.max(e)))),
        per_strength,
    }
}
