//! Writes `records.csv`, `report.md`, `figures/*.svg` and `manifest.json` for each command.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use balanced_sampler::write_outputs;
use serde_json::json;

use crate::analysis::{comparisons, summarize, summarize_bridge, BridgeSummary, BOOTSTRAP_RESAMPLES, BOOTSTRAP_SEED};
use crate::bridge::BridgeSpec;
use crate::config::GridConfig;
use crate::counterexample::{
    counterfactual_table, ei_suite, equivalence, hidden_phase, sign_pair_check, CfRow, HiddenPhaseSummary, PairCheck,
    U_GRID,
};
use crate::error::Result;
use crate::manifest::RunManifest;
use crate::records::{write_csv, BridgeRecord, SweepRecord, MODELS};
use crate::sampler_demo::{run_sampler, QueryRow, SamplerDemoConfig, SamplerOutcome};
use crate::svg::{Chart, Series};
use scm_core::{inverse_transport, EquivalenceReport};

fn f4(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.4}"))
}

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out.join("figures"))?;
    Ok(())
}

const CONVENTIONS: &str = "Paired tests use differences ours minus baseline over runs matched by configuration index. \
Wilcoxon signed-rank: zero differences dropped, exact two-sided p by enumeration for n <= 20, normal approximation \
with tie and continuity corrections above. Bootstrap: percentile interval of the mean difference.";

pub fn sweep_markdown(records: &[SweepRecord]) -> String {
    let mut s = String::new();
    let configs = records.iter().map(|r| r.config_index).collect::<std::collections::BTreeSet<_>>().len();
    let failed: Vec<&SweepRecord> = records.iter().filter(|r| !r.ok()).collect();
    let _ = writeln!(s, "# Sweep report\n");
    let _ = writeln!(s, "{configs} configurations, {} model fits, {} failed.\n", records.len(), failed.len());
    let summary = summarize(records);
    let _ = writeln!(s, "## Counterfactual MSE (mean over runs)\n");
    let _ = writeln!(s, "| family | {} | ours dir. acc. | runs |", MODELS.join(" | "));
    let _ = writeln!(s, "|---|{}---|---|", "---|".repeat(MODELS.len()));
    let fams = crate::analysis::families(records);
    for f in &fams {
        let get = |m: &str| summary.iter().find(|x| &x.family == f && x.model == m);
        let cells: Vec<String> = MODELS.iter().map(|m| f4(get(m).and_then(|x| x.mean_cf_mse))).collect();
        let ours = get("ours");
        let _ = writeln!(
            s,
            "| {f} | {} | {} | {} |",
            cells.join(" | "),
            f4(ours.and_then(|x| x.mean_direction_accuracy)),
            ours.map_or(0, |x| x.runs)
        );
    }
    let _ = writeln!(s, "\n## Latent recovery error (mean over runs)\n");
    let _ = writeln!(s, "| family | {} |", MODELS.join(" | "));
    let _ = writeln!(s, "|---|{}", "---|".repeat(MODELS.len()));
    for f in &fams {
        let cells: Vec<String> = MODELS
            .iter()
            .map(|m| f4(summary.iter().find(|x| &x.family == f && x.model == *m).and_then(|x| x.mean_latent_error)))
            .collect();
        let _ = writeln!(s, "| {f} | {} |", cells.join(" | "));
    }
    let comps = comparisons(records);
    if !comps.is_empty() {
        let _ = writeln!(s, "\n## Paired comparisons on flip families\n");
        let _ = writeln!(s, "| family | baseline | pairs | mean ours | mean baseline | ratio | Wilcoxon p | method | 95% CI of mean diff |");
        let _ = writeln!(s, "|---|---|---|---|---|---|---|---|---|");
        for c in &comps {
            let (p, method) = c
                .wilcoxon
                .map_or(("-".into(), "-".into()), |w| (format!("{:.3e}", w.p_two_sided), w.method.tag().to_string()));
            let ci = c.ci.map_or("-".into(), |(lo, hi)| format!("[{lo:.4}, {hi:.4}]"));
            let _ = writeln!(
                s,
                "| {} | {} | {} | {:.4} | {:.4} | {:.3} | {p} | {method} | {ci} |",
                c.family, c.baseline, c.pairs, c.mean_ours, c.mean_baseline, c.ratio
            );
        }
        let _ = writeln!(s, "\n{CONVENTIONS} {BOOTSTRAP_RESAMPLES} resamples, seed {BOOTSTRAP_SEED}.");
    }
    if !failed.is_empty() {
        let _ = writeln!(s, "\n## Failures\n");
        for r in failed {
            let _ = writeln!(
                s,
                "- config {} ({}, {}, seed {}), {}: {}",
                r.config_index, r.family, r.noise, r.seed, r.model, r.status
            );
        }
    }
    s
}

fn sweep_figures(out: &Path, records: &[SweepRecord]) -> Result<()> {
    let mut chart = Chart::new("Flip families: ours vs baselines", "baseline cf_mse", "ours cf_mse");
    let mut hi: f64 = 0.0;
    for b in ["anm", "tm_scm", "contextual_flow"] {
        let mut pts = Vec::new();
        for f in crate::analysis::FLIP_FAMILIES {
            pts.extend(crate::analysis::matched_pairs(records, f, b).into_iter().map(|(o, x)| (x, o)));
        }
        hi = pts.iter().fold(hi, |h, p| h.max(p.0).max(p.1));
        chart = chart.with(Series::scatter(b, pts));
    }
    chart = chart.with(Series::line("y = x", vec![(0.0, 0.0), (hi, hi)]));
    fs::write(out.join("figures/flip_ours_vs_baselines.svg"), chart.render())?;

    let summary = summarize(records);
    let fams = crate::analysis::families(records);
    let mut chart = Chart::new("Mean cf_mse by family", "family (report table order)", "mean cf_mse");
    for m in MODELS {
        let pts = fams
            .iter()
            .enumerate()
            .filter_map(|(k, f)| {
                summary
                    .iter()
                    .find(|x| &x.family == f && x.model == m)
                    .and_then(|x| x.mean_cf_mse)
                    .map(|v| ((k + 1) as f64, v))
            })
            .collect();
        chart = chart.with(Series::line(m, pts));
    }
    fs::write(out.join("figures/cf_mse_by_family.svg"), chart.render())?;
    Ok(())
}

pub fn failures_of(records: &[SweepRecord]) -> Vec<String> {
    records.iter().filter(|r| !r.ok()).map(|r| format!("config {} {}: {}", r.config_index, r.model, r.status)).collect()
}

pub fn write_sweep(out: &Path, grid: &GridConfig, records: &[SweepRecord]) -> Result<RunManifest> {
    prepare(out)?;
    write_csv(&out.join("records.csv"), records)?;
    fs::write(out.join("report.md"), sweep_markdown(records))?;
    sweep_figures(out, records)?;
    let seeds = grid.expand()?.iter().map(|r| r.seed).collect();
    RunManifest::new("sweep", grid.base_seed, seeds, serde_json::to_value(grid)?, failures_of(records)).write(out)
}

pub fn bridge_markdown(records: &[BridgeRecord], summary: &BridgeSummary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Bridge report\n");
    let _ = writeln!(s, "{} runs, {} failed. Gain = tm_scm cf_mse - ours cf_mse.\n", summary.runs, summary.failed);
    let _ = writeln!(s, "| strength | runs | realized NMS | ours cf_mse | tm_scm cf_mse | gain |");
    let _ = writeln!(s, "|---|---|---|---|---|---|");
    for p in &summary.per_strength {
        let _ = writeln!(
            s,
            "| {:.2} | {} | {:.4} | {:.4} | {:.4} | {:.4} |",
            p.strength, p.runs, p.mean_nms, p.mean_ours, p.mean_tmscm, p.mean_gain
        );
    }
    let _ = writeln!(s, "\n## Trend\n");
    let _ =
        writeln!(s, "- least-squares gain vs NMS: slope {}, intercept {}", f4(summary.slope), f4(summary.intercept));
    match summary.spearman {
        Some((rho, p)) => {
            let _ = writeln!(s, "- Spearman(gain, NMS): rho {rho:.4}, p {p:.3e} (t approximation, average ranks)");
        }
        None => {
            let _ = writeln!(s, "- Spearman(gain, NMS): not computable");
        }
    }
    let _ = writeln!(s, "- largest |NMS - strength|: {}", f4(summary.max_calibration_error));
    let failed: Vec<&BridgeRecord> = records.iter().filter(|r| !r.ok()).collect();
    if !failed.is_empty() {
        let _ = writeln!(s, "\n## Failures\n");
        for r in failed {
            let _ = writeln!(
                s,
                "- run {} (strength {}, {}, seed {}): {}",
                r.run_index, r.strength, r.noise, r.seed, r.status
            );
        }
    }
    s
}

pub fn write_bridge(out: &Path, spec: &BridgeSpec, records: &[BridgeRecord]) -> Result<(BridgeSummary, RunManifest)> {
    prepare(out)?;
    let summary = summarize_bridge(records);
    write_csv(&out.join("records.csv"), records)?;
    fs::write(out.join("report.md"), bridge_markdown(records, &summary))?;

    let ok: Vec<&BridgeRecord> = records.iter().filter(|r| r.ok()).collect();
    let pts: Vec<(f64, f64)> = ok.iter().filter_map(|r| Some((r.nms_synth?, r.gain?))).collect();
    let mut chart = Chart::new("Gain over the gate-frozen baseline", "realized NMS", "gain (cf_mse)")
        .with(Series::scatter("runs", pts.clone()));
    if let (Some(a), Some(b)) = (summary.intercept, summary.slope) {
        let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.0), h.max(p.0)));
        chart = chart.with(Series::line("least squares", vec![(lo, a + b * lo), (hi, a + b * hi)]));
    }
    fs::write(out.join("figures/bridge_gain.svg"), chart.render())?;
    let by_strength = |f: fn(&crate::analysis::StrengthSummary) -> f64| {
        summary.per_strength.iter().map(|p| (p.strength, f(p))).collect::<Vec<_>>()
    };
    let chart = Chart::new("Mean cf_mse by bridge strength", "strength", "mean cf_mse")
        .with(Series::line("ours", by_strength(|p| p.mean_ours)))
        .with(Series::line("tm_scm", by_strength(|p| p.mean_tmscm)));
    fs::write(out.join("figures/bridge_strength.svg"), chart.render())?;

    let seeds = records.iter().map(|r| r.seed).collect();
    let failures = records.iter().filter(|r| !r.ok()).map(|r| format!("run {}: {}", r.run_index, r.status)).collect();
    let m = RunManifest::new("bridge", spec.base_seed, seeds, serde_json::to_value(spec)?, failures).write(out)?;
    Ok((summary, m))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleReport {
    pub rows: Vec<CfRow>,
    pub equivalence: EquivalenceReport,
    pub sign_pair: PairCheck,
    pub controls: Vec<PairCheck>,
    pub hidden: HiddenPhaseSummary,
}

pub const CONTROL_PAIRS: usize = 20;
pub const CONTROL_QUERIES: usize = 200;
pub const CONTROL_SEED: u64 = 11;

pub fn counterexample_report() -> Result<CounterexampleReport> {
    Ok(CounterexampleReport {
        rows: counterfactual_table()?,
        equivalence: equivalence()?,
        sign_pair: sign_pair_check(CONTROL_QUERIES, CONTROL_SEED)?,
        controls: ei_suite(CONTROL_PAIRS, CONTROL_QUERIES, CONTROL_SEED)?,
        hidden: hidden_phase()?,
    })
}

pub fn counterexample_markdown(r: &CounterexampleReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Observationally equivalent, counterfactually different\n");
    let _ = writeln!(s, "M: X = U_X, Y = sgn(X) U_Y. M': X = U_X, Y = U_Y. Standard gaussian noise in both.\n");
    let e = &r.equivalence;
    let _ = writeln!(s, "## Observational equivalence (two-sample KS, n = {}, alpha = {})\n", e.n, e.alpha);
    let _ = writeln!(s, "| variable | statistic | critical | pass |");
    let _ = writeln!(s, "|---|---|---|---|");
    for (k, m) in e.ks_marginals.iter().enumerate() {
        let _ = writeln!(
            s,
            "| {} | {:.5} | {:.5} | {} |",
            ["X", "Y"].get(k).unwrap_or(&"?"),
            m.statistic,
            m.critical,
            m.pass
        );
    }
    let _ = writeln!(s, "\nOverall: {}\n", if e.pass { "PASS" } else { "FAIL" });
    let _ = writeln!(s, "## Counterfactuals\n");
    let _ = writeln!(s, "| factual (x, y) | do(X) | M | M' | disagreement |");
    let _ = writeln!(s, "|---|---|---|---|---|");
    for c in &r.rows {
        let _ = writeln!(
            s,
            "| ({}, {}) | {} | ({}, {}) | ({}, {}) | {} |",
            c.x, c.y, c.do_x, c.m_x, c.m_y, c.m_prime_x, c.m_prime_y, c.disagreement
        );
    }
    let _ = writeln!(s, "\n## Transport variation\n");
    let _ = writeln!(s, "Contexts are 64 draws from the first model; probe points u in {:?}.\n", U_GRID);
    let _ = writeln!(s, "| pair | transport variation | max CF disagreement | queries |");
    let _ = writeln!(s, "|---|---|---|---|");
    for p in std::iter::once(&r.sign_pair).chain(&r.controls) {
        let _ =
            writeln!(s, "| {} | {:.3e} | {:.3e} | {} |", p.label, p.transport_variation, p.cf_disagreement, p.queries);
    }
    let h = &r.hidden;
    let _ = writeln!(s, "\n## Hidden phase\n");
    let _ = writeln!(
        s,
        "X = U_X, S = Phi(U_S), Y = (2 1[S <= sigmoid({} X)] - 1) exp(U_Y / 2). The surrogate sees only (X, Y) and keeps the observed sign under intervention.\n",
        h.slope
    );
    let ks: Vec<String> = h.ks_statistics.iter().map(|x| format!("{x:.5}")).collect();
    let _ = writeln!(
        s,
        "KS on (X, Y): statistics [{}], critical {:.5}, {}\n",
        ks.join(", "),
        h.ks_critical,
        if h.ks_pass { "PASS" } else { "FAIL" }
    );
    let _ = writeln!(s, "| (x, s, y) | do(X) | true Y | surrogate Y |");
    let _ = writeln!(s, "|---|---|---|---|");
    for row in &h.rows {
        let _ = writeln!(
            s,
            "| ({}, {}, {}) | {} | {:.4} | {:.4} |",
            row.x, row.s, row.y, row.do_x, row.true_cf, row.surrogate_cf
        );
    }
    s
}

pub fn write_counterexample(out: &Path) -> Result<(CounterexampleReport, RunManifest)> {
    prepare(out)?;
    let r = counterexample_report()?;
    write_csv(&out.join("records.csv"), &r.rows)?;
    fs::write(out.join("report.md"), counterexample_markdown(&r))?;

    let (m, mp) = mechanism_zoo::make_counterexample_pair();
    let curve = |x: f64| -> Result<Vec<(f64, f64)>> {
        (0..=40)
            .map(|k| {
                let u = -2.0 + 0.1 * k as f64;
                Ok((u, inverse_transport(&m, &mp, 1, &[x], u)?))
            })
            .collect()
    };
    let chart = Chart::new("Inverse transport M to M' for Y", "u", "transported u")
        .with(Series::line("x = 1", curve(1.0)?))
        .with(Series::line("x = -1", curve(-1.0)?));
    fs::write(out.join("figures/transport.svg"), chart.render())?;

    let mut failures = Vec::new();
    if !r.equivalence.pass {
        failures.push("KS equivalence check failed".into());
    }
    let config =
        json!({ "control_pairs": CONTROL_PAIRS, "control_queries": CONTROL_QUERIES, "ks_samples": r.equivalence.n });
    let manifest = RunManifest::new("counterexample", CONTROL_SEED, vec![CONTROL_SEED], config, failures).write(out)?;
    Ok((r, manifest))
}

pub fn sampler_markdown(cfg: &SamplerDemoConfig, o: &SamplerOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Balanced query sampler on the latch environment\n");
    let _ = writeln!(
        s,
        "{} rollouts x {} candidates = {} candidates, {} informative, budget {}.\n",
        cfg.rollouts,
        cfg.per_rollout,
        o.pool.len(),
        o.informative.len(),
        cfg.budget
    );
    let _ = writeln!(s, "| task | queries | factual success | cf success | change rate | S->S/S->F/F->S/F->F |");
    let _ = writeln!(s, "|---|---|---|---|---|---|");
    let _ = writeln!(s, "| {} |", o.stats.table_row("latch").replace(" & ", " | "));
    let _ = writeln!(s, "\nMean window length: {:.3}.", o.stats.window_mean);
    if o.selection.short {
        let _ = writeln!(s, "\nWARNING: budget not reached under the one-query-per-rollout rule.");
    }
    s
}

pub fn write_sampler(out: &Path, cfg: &SamplerDemoConfig) -> Result<(SamplerOutcome, RunManifest)> {
    prepare(out)?;
    let o = run_sampler(cfg)?;
    write_outputs(out, &o.selection.queries)?;
    let rows: Vec<QueryRow> = o.selection.queries.iter().map(QueryRow::from).collect();
    write_csv(&out.join("records.csv"), &rows)?;
    fs::write(out.join("report.md"), sampler_markdown(cfg, &o))?;
    let t = &o.stats.transition_counts;
    let chart = Chart::new("Selected transitions", "label (S->S, S->F, F->S, F->F)", "count").with(Series::line(
        "queries",
        vec![(1.0, t.ss as f64), (2.0, t.sf as f64), (3.0, t.fs as f64), (4.0, t.ff as f64)],
    ));
    fs::write(out.join("figures/transitions.svg"), chart.render())?;
    let failures = if o.selection.short { vec![format!("budget {} not reached", cfg.budget)] } else { Vec::new() };
    let m =
        RunManifest::new("sampler-demo", cfg.seed, vec![cfg.seed], serde_json::to_value(cfg)?, failures).write(out)?;
    Ok((o, m))
}
