//! Flat result rows and their CSV form.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Model names in report column order.
pub const MODELS: [&str; 4] = ["anm", "tm_scm", "contextual_flow", "ours"];

pub const STATUS_OK: &str = "ok";

/// One (configuration, model) result. Metrics are empty when the run failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub config_index: usize,
    pub family: String,
    pub noise: String,
    pub d: usize,
    pub n_train: usize,
    pub replicate: usize,
    pub seed: u64,
    pub model: String,
    pub status: String,
    pub nms_synth: Option<f64>,
    pub cf_mse: Option<f64>,
    pub latent_error: Option<f64>,
    pub direction_accuracy: Option<f64>,
    /// Seconds spent fitting; kept out of files so reruns are byte-identical.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl SweepRecord {
    pub fn ok(&self) -> bool {
        self.status == STATUS_OK
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeRecord {
    pub run_index: usize,
    pub strength: f64,
    pub noise: String,
    pub replicate: usize,
    pub seed: u64,
    pub status: String,
    pub nms_synth: Option<f64>,
    pub ours_cf_mse: Option<f64>,
    pub tmscm_cf_mse: Option<f64>,
    /// `tmscm_cf_mse - ours_cf_mse`.
    pub gain: Option<f64>,
}

impl BridgeRecord {
    pub fn ok(&self) -> bool {
        self.status == STATUS_OK
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}
