//! Per-configuration fitting and scoring, run over a bounded work pool.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use baseline_models::{
    cf_mse, fit_anm, fit_contextual_flow, fit_ours, fit_tmscm, latent_recovery_error, CounterfactualModel,
};
use causal_inverter::{direction_accuracy, TriangularModel};
use mechanism_zoo::{make_scm, sample_dataset, DatasetBundle, SweepConfig};
use rayon::prelude::*;

use crate::config::{GridConfig, RunSpec, TrainOverrides};
use crate::error::{HarnessError, Result};
use crate::records::{SweepRecord, MODELS, STATUS_OK};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub cf_mse: f64,
    pub latent_error: f64,
    pub direction_accuracy: f64,
}

fn score<M: CounterfactualModel + TriangularModel>(m: &M, bundle: &DatasetBundle) -> Scores {
    Scores {
        cf_mse: cf_mse(m, bundle),
        latent_error: latent_recovery_error(m, bundle),
        direction_accuracy: direction_accuracy(m, bundle),
    }
}

/// Fits `model` on `bundle` and scores it on the test split and queries.
pub fn fit_and_score(
    model: &str,
    bundle: &DatasetBundle,
    seed: u64,
    train: &TrainOverrides,
) -> std::result::Result<Scores, String> {
    let cfg = train.config(seed);
    let run = || -> std::result::Result<Scores, String> {
        let s = match model {
            "anm" => score(&fit_anm(bundle, seed).map_err(|e| e.to_string())?, bundle),
            "tm_scm" => score(&fit_tmscm(bundle, seed, &cfg).map_err(|e| e.to_string())?.0, bundle),
            "contextual_flow" => score(&fit_contextual_flow(bundle, seed).map_err(|e| e.to_string())?, bundle),
            "ours" => score(&fit_ours(bundle, seed, &cfg).map_err(|e| e.to_string())?.0, bundle),
            other => return Err(format!("unknown model {other}")),
        };
        if [s.cf_mse, s.latent_error, s.direction_accuracy].iter().all(|x| x.is_finite()) {
            Ok(s)
        } else {
            Err("non-finite metric".into())
        }
    };
    catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()))
}

pub fn make_bundle(cfg: &SweepConfig) -> std::result::Result<DatasetBundle, String> {
    let (scm, truth) = make_scm(cfg).map_err(|e| e.to_string())?;
    sample_dataset(&scm, &truth, cfg).map_err(|e| e.to_string())
}

/// One record per model; a failed data generation marks every model of the run failed.
pub fn run_config(spec: &RunSpec, train: &TrainOverrides) -> Vec<SweepRecord> {
    let base = |model: &str| SweepRecord {
        config_index: spec.index,
        family: spec.family.label(),
        noise: spec.noise.to_string(),
        d: spec.d,
        n_train: spec.n_train,
        replicate: spec.replicate,
        seed: spec.seed,
        model: model.into(),
        status: STATUS_OK.into(),
        nms_synth: None,
        cf_mse: None,
        latent_error: None,
        direction_accuracy: None,
        wall_time_s: 0.0,
    };
    let bundle = SweepConfig::new(spec.family, spec.noise, spec.d, spec.n_train, spec.seed)
        .map_err(|e| e.to_string())
        .and_then(|cfg| make_bundle(&cfg));
    let bundle = match bundle {
        Ok(b) => b,
        Err(e) => {
            return MODELS.iter().map(|m| SweepRecord { status: format!("failed: data: {e}"), ..base(m) }).collect()
        }
    };
    let nms = bundle.nms_synth();
    MODELS
        .iter()
        .map(|m| {
            let t = Instant::now();
            let outcome = fit_and_score(m, &bundle, spec.seed, train);
            let mut r = SweepRecord { nms_synth: Some(nms), wall_time_s: t.elapsed().as_secs_f64(), ..base(m) };
            match outcome {
                Ok(s) => {
                    r.cf_mse = Some(s.cf_mse);
                    r.latent_error = Some(s.latent_error);
                    r.direction_accuracy = Some(s.direction_accuracy);
                }
                Err(e) => r.status = format!("failed: {e}"),
            }
            r
        })
        .collect()
}

/// Runs `f` over `items` on a pool of `jobs` threads, keeping input order.
pub fn in_pool<T: Sync, R: Send>(jobs: usize, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Result<Vec<R>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

/// All records of the grid, ordered by configuration index then model.
pub fn run_sweep(
    grid: &GridConfig,
    jobs: usize,
    progress: impl Fn(&[SweepRecord]) + Sync + Send,
) -> Result<Vec<SweepRecord>> {
    let specs = grid.expand()?;
    let per_run = in_pool(jobs, &specs, |s| {
        let recs = run_config(s, &grid.train);
        progress(&recs);
        recs
    })?;
    Ok(per_run.into_iter().flatten().collect())
}
