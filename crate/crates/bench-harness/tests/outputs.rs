use std::fs;
use std::path::Path;
use std::process::Command;

use bench_harness::manifest::MANIFEST_FILE;
use bench_harness::records::read_csv;
use bench_harness::sampler_demo::QueryRow;
use bench_harness::{validate_manifest, RunManifest, SweepRecord, MODELS};

fn harness(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bench-harness")).args(args).output().expect("binary runs")
}

fn tiny_sweep(out: &Path, jobs: &str) -> std::process::Output {
    harness(&[
        "sweep",
        "--families",
        "global_monotone,threshold_flip",
        "--noises",
        "gaussian",
        "--n-train",
        "500",
        "--seeds",
        "1",
        "--steps",
        "40",
        "--jobs",
        jobs,
        "--out",
        out.to_str().unwrap(),
    ])
}

fn read(p: &Path) -> Vec<u8> {
    fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn sweep_outputs_are_complete_and_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let out = tiny_sweep(&a, "1");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tiny_sweep(&b, "2").status.success());

    for f in [
        "records.csv",
        "report.md",
        MANIFEST_FILE,
        "figures/flip_ours_vs_baselines.svg",
        "figures/cf_mse_by_family.svg",
    ] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f} differs between runs");
    }

    let m = validate_manifest(&a).unwrap();
    assert_eq!(m.command, "sweep");
    assert!(m.failures.is_empty());
    assert_eq!(m.seeds.len(), 2);

    let records: Vec<SweepRecord> = read_csv(&a.join("records.csv")).unwrap();
    assert_eq!(records.len(), 2 * MODELS.len());
    assert!(records.iter().all(|r| r.ok() && r.cf_mse.is_some_and(f64::is_finite)));
    let models: Vec<&str> = records.iter().take(MODELS.len()).map(|r| r.model.as_str()).collect();
    assert_eq!(models, MODELS);

    let header = fs::read_to_string(a.join("records.csv")).unwrap();
    assert!(!header.contains("wall_time"));
    let report = fs::read_to_string(a.join("report.md")).unwrap();
    assert!(report.contains("| family | anm | tm_scm | contextual_flow | ours | ours dir. acc. | runs |"));
    assert!(report.contains("| threshold_flip |"));
}

#[test]
fn tampered_output_fails_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let out = harness(&["counterexample", "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success());
    assert!(validate_manifest(tmp.path()).is_ok());

    let report = tmp.path().join("report.md");
    let mut text = fs::read_to_string(&report).unwrap();
    text.push('\n');
    fs::write(&report, text).unwrap();
    assert!(validate_manifest(tmp.path()).is_err());

    fs::write(&report, b"").unwrap();
    fs::remove_file(tmp.path().join("figures/transport.svg")).unwrap();
    assert!(validate_manifest(tmp.path()).is_err());
}

#[test]
fn counterexample_report_contains_the_worked_row() {
    let tmp = tempfile::tempdir().unwrap();
    let out = harness(&["counterexample", "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("factual (1, 0.7) do(X=-1): M (-1, -0.7), M' (-1, 0.7)"), "{stdout}");
    let report = fs::read_to_string(tmp.path().join("report.md")).unwrap();
    assert!(report.contains("| (1, 0.7) | -1 | (-1, -0.7) | (-1, 0.7) |"));
    assert!(report.contains("Overall: PASS"));
    assert!(tmp.path().join("figures/transport.svg").exists());
}

#[test]
fn sampler_demo_writes_balanced_queries() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out =
        harness(&["sampler-demo", "--rollouts", "50", "--budget", "32", "--seed", "7", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "latch & 32 & 0.5000 & 0.5000 & 0.5000 & 8/8/8/8");

    let stats: serde_json::Value = serde_json::from_slice(&read(&dir.join("sampler_stats.json"))).unwrap();
    for key in ["query_count", "factual_success_rate", "cf_success_rate", "change_rate", "transition_counts"] {
        assert!(stats.get(key).is_some(), "missing {key}");
    }
    assert_eq!(stats["query_count"], 32);
    assert_eq!(stats["change_rate"], 0.5);

    let queries: Vec<serde_json::Value> = serde_json::from_slice(&read(&dir.join("queries.json"))).unwrap();
    assert_eq!(queries.len(), 32);
    let rows: Vec<QueryRow> = read_csv(&dir.join("records.csv")).unwrap();
    let mut ids: Vec<usize> = rows.iter().map(|r| r.factual_id).collect();
    ids.sort_unstable();
    ids.dedup();
    assert_eq!(ids.len(), 32);
    assert_eq!(RunManifest::load(dir).unwrap().command, "sampler-demo");
    validate_manifest(dir).unwrap();
}

#[test]
fn unmet_budget_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = harness(&["sampler-demo", "--rollouts", "5", "--budget", "32", "--out", tmp.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let m = validate_manifest(tmp.path()).unwrap();
    assert_eq!(m.failures.len(), 1);
}

#[test]
fn bad_arguments_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert!(!harness(&["sweep", "--families", "no_such_family", "--out", out]).status.success());
    assert!(!harness(&["bridge", "--strengths", "0,1.5", "--out", out]).status.success());
    assert!(!harness(&["sampler-demo", "--budget", "0", "--out", out]).status.success());
}

#[test]
fn selftest_passes() {
    let out = harness(&["selftest"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 7);
}
