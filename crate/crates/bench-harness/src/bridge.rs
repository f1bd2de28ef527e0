//! Gain of the gated inverter over the gate-frozen baseline as orientation flips are dialled in.

use mechanism_zoo::{MechanismFamily, SweepConfig};
use scm_core::{rng, NoiseFamily};
use serde::{Deserialize, Serialize};

use crate::config::{TrainOverrides, DEFAULT_BASE_SEED};
use crate::error::{HarnessError, Result};
use crate::records::{BridgeRecord, STATUS_OK};
use crate::sweep::{fit_and_score, in_pool, make_bundle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeSpec {
    pub strengths: Vec<f64>,
    pub noises: Vec<NoiseFamily>,
    pub seeds: usize,
    pub d: usize,
    pub n_train: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub train: TrainOverrides,
}

impl Default for BridgeSpec {
    fn default() -> Self {
        Self {
            strengths: vec![0.0, 0.3, 0.6, 0.9],
            noises: vec![NoiseFamily::Gaussian, NoiseFamily::Mixture],
            seeds: 3,
            d: 3,
            n_train: 10_000,
            base_seed: DEFAULT_BASE_SEED,
            train: TrainOverrides::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeRun {
    pub index: usize,
    pub strength: f64,
    pub noise: NoiseFamily,
    pub replicate: usize,
    pub seed: u64,
}

impl BridgeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.strengths.len() < 3 {
            return Err(HarnessError::Config("bridge needs at least 3 strengths".into()));
        }
        if let Some(s) = self.strengths.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(HarnessError::Config(format!("strength {s} outside [0, 1]")));
        }
        if self.noises.is_empty() || self.seeds == 0 {
            return Err(HarnessError::Config("bridge needs a noise family and a seed".into()));
        }
        Ok(())
    }

    /// Runs in strength, noise, replicate order, run `k` seeded by `derive_seed(base_seed, k)`.
    pub fn runs(&self) -> Result<Vec<BridgeRun>> {
        self.validate()?;
        let mut out = Vec::new();
        for &strength in &self.strengths {
            for &noise in &self.noises {
                for replicate in 0..self.seeds {
                    let index = out.len();
                    out.push(BridgeRun {
                        index,
                        strength,
                        noise,
                        replicate,
                        seed: rng::derive_seed(self.base_seed, index as u64),
                    });
                }
            }
        }
        Ok(out)
    }
}

pub fn run_bridge_one(run: &BridgeRun, spec: &BridgeSpec) -> BridgeRecord {
    let mut rec = BridgeRecord {
        run_index: run.index,
        strength: run.strength,
        noise: run.noise.to_string(),
        replicate: run.replicate,
        seed: run.seed,
        status: STATUS_OK.into(),
        nms_synth: None,
        ours_cf_mse: None,
        tmscm_cf_mse: None,
        gain: None,
    };
    let bundle = MechanismFamily::bridge(run.strength)
        .and_then(|f| SweepConfig::new(f, run.noise, spec.d, spec.n_train, run.seed))
        .map_err(|e| e.to_string())
        .and_then(|cfg| make_bundle(&cfg));
    let bundle = match bundle {
        Ok(b) => b,
        Err(e) => {
            rec.status = format!("failed: calibration: {e}");
            return rec;
        }
    };
    rec.nms_synth = Some(bundle.nms_synth());
    let ours = fit_and_score("ours", &bundle, run.seed, &spec.train);
    let tm = fit_and_score("tm_scm", &bundle, run.seed, &spec.train);
    match (ours, tm) {
        (Ok(o), Ok(t)) => {
            rec.ours_cf_mse = Some(o.cf_mse);
            rec.tmscm_cf_mse = Some(t.cf_mse);
            rec.gain = Some(t.cf_mse - o.cf_mse);
        }
        (Err(e), _) => rec.status = format!("failed: ours: {e}"),
        (_, Err(e)) => rec.status = format!("failed: tm_scm: {e}"),
    }
    rec
}

pub fn run_bridge(
    spec: &BridgeSpec,
    jobs: usize,
    progress: impl Fn(&BridgeRecord) + Sync + Send,
) -> Result<Vec<BridgeRecord>> {
    let runs = spec.runs()?;
    in_pool(jobs, &runs, |r| {
        let rec = run_bridge_one(r, spec);
        progress(&rec);
        rec
    })
}
