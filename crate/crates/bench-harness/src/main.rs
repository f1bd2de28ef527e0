use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use anyhow::{Context, Result};
use bench_harness::bridge::BridgeSpec;
use bench_harness::config::{parse_family, parse_noise, GridConfig};
use bench_harness::sampler_demo::SamplerDemoConfig;
use bench_harness::{checks, report, run_bridge, run_sweep};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bench-harness", about = "Counterfactual benchmark sweeps, demos and reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit all models over a configuration grid.
    Sweep {
        /// JSON grid; the desk-scale default grid when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, value_delimiter = ',')]
        families: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        noises: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        n_train: Option<Vec<usize>>,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        base_seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Gain over the gate-frozen baseline across orientation-flip strengths.
    Bridge {
        #[arg(long, value_delimiter = ',', default_value = "0,0.3,0.6,0.9")]
        strengths: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "gaussian,mixture")]
        noises: Vec<String>,
        #[arg(long, default_value_t = 3)]
        seeds: usize,
        #[arg(long, default_value_t = 10_000)]
        n_train: usize,
        #[arg(long, default_value_t = bench_harness::config::DEFAULT_BASE_SEED)]
        base_seed: u64,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Observationally equivalent pair with different counterfactuals, plus controls.
    Counterexample {
        #[arg(long)]
        out: PathBuf,
    },
    /// Balanced query selection on the toy latch environment.
    SamplerDemo {
        #[arg(long, default_value_t = 50)]
        rollouts: usize,
        #[arg(long, default_value_t = 8)]
        per_rollout: usize,
        #[arg(long, default_value_t = 32)]
        budget: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Quick property checks across all components.
    Selftest,
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> Result<ExitCode> {
    let started = Instant::now();
    let code = match Cli::parse().command {
        Command::Sweep { config, out, jobs, families, noises, n_train, seeds, base_seed, steps } => {
            let mut grid = match config {
                Some(p) => GridConfig::load(&p).with_context(|| format!("reading {}", p.display()))?,
                None => GridConfig::desk(),
            };
            if let Some(f) = families {
                for x in &f {
                    parse_family(x)?;
                }
                grid.families = f;
            }
            if let Some(n) = noises {
                for x in &n {
                    parse_noise(x)?;
                }
                grid.noises = n;
            }
            grid.n_train = n_train.unwrap_or(grid.n_train);
            grid.seeds = seeds.unwrap_or(grid.seeds);
            grid.base_seed = base_seed.unwrap_or(grid.base_seed);
            grid.train.steps = steps.or(grid.train.steps);
            grid.validate()?;
            let total = grid.expand()?.len();
            let done = AtomicUsize::new(0);
            let records = run_sweep(&grid, jobs, |recs| {
                let k = done.fetch_add(1, Ordering::SeqCst) + 1;
                let t: f64 = recs.iter().map(|r| r.wall_time_s).sum();
                if let Some(r) = recs.first() {
                    eprintln!(
                        "[{k}/{total}] config {} {} {} n={} ({t:.1}s)",
                        r.config_index, r.family, r.noise, r.n_train
                    );
                }
            })?;
            let manifest = report::write_sweep(&out, &grid, &records)?;
            for f in &manifest.failures {
                eprintln!("failed: {f}");
            }
            println!("wrote {} ({} records)", out.display(), records.len());
            status(manifest.failures.is_empty())
        }
        Command::Bridge { strengths, noises, seeds, n_train, base_seed, steps, out, jobs } => {
            let mut spec = BridgeSpec { strengths, seeds, n_train, base_seed, ..BridgeSpec::default() };
            spec.noises = noises.iter().map(|n| parse_noise(n)).collect::<Result<_, _>>()?;
            spec.train.steps = steps;
            let total = spec.runs()?.len();
            let done = AtomicUsize::new(0);
            let records = run_bridge(&spec, jobs, |r| {
                let k = done.fetch_add(1, Ordering::SeqCst) + 1;
                eprintln!("[{k}/{total}] strength {} {} replicate {}: {}", r.strength, r.noise, r.replicate, r.status);
            })?;
            let (summary, manifest) = report::write_bridge(&out, &spec, &records)?;
            if let Some((rho, p)) = summary.spearman {
                println!("spearman rho {rho:.4} p {p:.3e}");
            }
            println!("wrote {}", out.display());
            status(manifest.failures.is_empty())
        }
        Command::Counterexample { out } => {
            let (r, manifest) = report::write_counterexample(&out)?;
            let row = &r.rows[0];
            println!(
                "factual ({}, {}) do(X={}): M ({}, {}), M' ({}, {}); KS {}",
                row.x,
                row.y,
                row.do_x,
                row.m_x,
                row.m_y,
                row.m_prime_x,
                row.m_prime_y,
                if r.equivalence.pass { "pass" } else { "fail" }
            );
            status(manifest.failures.is_empty())
        }
        Command::SamplerDemo { rollouts, per_rollout, budget, seed, out } => {
            let cfg = SamplerDemoConfig { rollouts, per_rollout, budget, seed };
            let (o, manifest) = report::write_sampler(&out, &cfg)?;
            println!("{}", o.stats.table_row("latch"));
            if o.selection.short {
                eprintln!("warning: budget {budget} not reached");
            }
            status(manifest.failures.is_empty())
        }
        Command::Selftest => {
            let results = checks::selftest();
            for c in &results {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            status(results.iter().all(|c| c.pass))
        }
    };
    eprintln!("done in {:.1}s", started.elapsed().as_secs_f64());
    Ok(code)
}
