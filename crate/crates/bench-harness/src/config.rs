//! JSON sweep grids and their expansion into seeded runs.

use std::path::Path;

use causal_inverter::TrainConfig;
use mechanism_zoo::{FamilyTag, MechanismFamily};
use scm_core::{rng, NoiseFamily};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const DEFAULT_BASE_SEED: u64 = 7;

/// Parses `global_monotone`, `threshold_flip`, `smooth_flip` or `bridge@<strength>`.
pub fn parse_family(label: &str) -> Result<MechanismFamily> {
    let bad = |e: mechanism_zoo::ZooError| HarnessError::Config(e.to_string());
    match label.split_once('@') {
        Some((tag, s)) => {
            let tag: FamilyTag = tag.parse().map_err(bad)?;
            let strength: f64 = s.parse().map_err(|_| HarnessError::Config(format!("bad strength in '{label}'")))?;
            MechanismFamily::new(tag, Some(strength)).map_err(bad)
        }
        None => MechanismFamily::new(label.parse().map_err(bad)?, None).map_err(bad),
    }
}

pub fn parse_noise(tag: &str) -> Result<NoiseFamily> {
    tag.parse().map_err(|e: scm_core::ScmError| HarnessError::Config(e.to_string()))
}

/// Optional training overrides applied on top of the default optimizer settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
}

impl TrainOverrides {
    pub fn config(&self, seed: u64) -> TrainConfig {
        let mut cfg = TrainConfig::with_seed(seed);
        if let Some(s) = self.steps {
            cfg.steps = s;
        }
        if let Some(b) = self.batch_size {
            cfg.batch_size = b;
        }
        if let Some(lr) = self.learning_rate {
            cfg.learning_rate = lr;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_base_seed")]
    pub base_seed: u64,
    pub families: Vec<String>,
    pub noises: Vec<String>,
    pub dims: Vec<usize>,
    pub n_train: Vec<usize>,
    /// Replicates per grid cell.
    pub seeds: usize,
    #[serde(default)]
    pub train: TrainOverrides,
}

fn default_base_seed() -> u64 {
    DEFAULT_BASE_SEED
}

/// One grid cell replicate with its derived seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub index: usize,
    pub family: MechanismFamily,
    pub noise: NoiseFamily,
    pub d: usize,
    pub n_train: usize,
    pub replicate: usize,
    pub seed: u64,
}

impl GridConfig {
    /// Three families, gaussian and mixture noise, `d = 3`, `n` in {2000, 10000}, three replicates.
    pub fn desk() -> Self {
        Self {
            base_seed: DEFAULT_BASE_SEED,
            families: ["global_monotone", "threshold_flip", "smooth_flip"].map(String::from).to_vec(),
            noises: ["gaussian", "mixture"].map(String::from).to_vec(),
            dims: vec![3],
            n_train: vec![2000, 10_000],
            seeds: 3,
            train: TrainOverrides::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() || self.noises.is_empty() || self.dims.is_empty() || self.n_train.is_empty() {
            return Err(HarnessError::Config("every grid axis needs at least one value".into()));
        }
        if self.seeds == 0 {
            return Err(HarnessError::Config("seeds must be at least 1".into()));
        }
        for f in &self.families {
            parse_family(f)?;
        }
        for n in &self.noises {
            parse_noise(n)?;
        }
        if let Some(&d) = self.dims.iter().find(|&&d| d < 2) {
            return Err(HarnessError::Config(format!("d = {d} < 2")));
        }
        if let Some(&n) = self.n_train.iter().find(|&&n| n < 100) {
            return Err(HarnessError::Config(format!("n_train = {n} < 100")));
        }
        self.train.config(0).validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }

    /// Runs in family, noise, d, n, replicate order; run `k` is seeded by `derive_seed(base_seed, k)`.
    pub fn expand(&self) -> Result<Vec<RunSpec>> {
        self.validate()?;
        let mut runs = Vec::new();
        for f in &self.families {
            let family = parse_family(f)?;
            for nz in &self.noises {
                let noise = parse_noise(nz)?;
                for &d in &self.dims {
                    for &n_train in &self.n_train {
                        for replicate in 0..self.seeds {
                            let index = runs.len();
                            let seed = rng::derive_seed(self.base_seed, index as u64);
                            runs.push(RunSpec { index, family, noise, d, n_train, replicate, seed });
                        }
                    }
                }
            }
        }
        Ok(runs)
    }
}
