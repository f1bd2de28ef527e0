//! Dataset sampling, counterfactual query construction and non-monotonicity scores.

use std::fs;
use std::path::Path;

use rand::Rng as _;
use scm_core::rng;
use scm_core::{CounterfactualQuery, Intervention, TriangularScm};
use serde::{Deserialize, Serialize};

use crate::config::SweepConfig;
use crate::error::{Result, ZooError};
use crate::family::{OrientationTruth, RESPONSE_BEND};

/// Row-major sample matrix.
pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetBundle {
    pub config: SweepConfig,
    pub v_train: Matrix,
    pub v_test: Matrix,
    pub u_train: Matrix,
    pub u_test: Matrix,
    /// `orientation_test[row][i - 1]` is the true orientation of mechanism `i` at test row `row`.
    pub orientation_test: Vec<Vec<i8>>,
    pub cf_queries: Vec<CounterfactualQuery>,
}

impl DatasetBundle {
    pub fn d(&self) -> usize {
        self.config.d
    }

    pub fn nms_synth(&self) -> f64 {
        nms_synth(&self.orientation_test).unwrap_or(0.0)
    }
}

/// Samples train/test splits and single-coordinate counterfactual queries from `scm`.
pub fn sample_dataset(scm: &TriangularScm, truth: &OrientationTruth, config: &SweepConfig) -> Result<DatasetBundle> {
    config.validate()?;
    if scm.d() != config.d || truth.d() != config.d {
        return Err(ZooError::Config("model dimension differs from config".into()));
    }
    let d = config.d;
    let (u_train, v_train) = scm.sample(config.n_train, &mut rng::stream(config.seed, "train"))?;
    let (u_test, v_test) = scm.sample(config.n_test, &mut rng::stream(config.seed, "test"))?;
    let orientation_test = v_test.iter().map(|v| (1..d).map(|i| truth.sign(i, &scm.context(v, i))).collect()).collect();

    let mut qrng = rng::stream(config.seed, "queries");
    let (_, factuals) = scm.sample(config.n_cf, &mut qrng)?;
    let mut cf_queries = Vec::with_capacity(config.n_cf);
    for factual in factuals {
        let target = qrng.random_range(0..d);
        let donor = qrng.random_range(0..v_train.len());
        let mut q = CounterfactualQuery::new(factual, Intervention::single(target, v_train[donor][target]));
        q.truth_cf = Some(scm.counterfactual(&q)?);
        cf_queries.push(q);
    }

    Ok(DatasetBundle { config: config.clone(), v_train, v_test, u_train, u_test, orientation_test, cf_queries })
}

/// Mean over mechanisms of `2 min(r, 1 - r)`, `r` the fraction of negative orientations.
pub fn nms_synth(orientation: &[Vec<i8>]) -> Result<f64> {
    let cols = orientation.first().map_or(0, |r| r.len());
    if orientation.is_empty() || cols == 0 {
        return Err(ZooError::Empty);
    }
    let n = orientation.len() as f64;
    let total: f64 = (0..cols)
        .map(|j| {
            let r = orientation.iter().filter(|row| row[j] < 0).count() as f64 / n;
            2.0 * r.min(1.0 - r)
        })
        .sum();
    Ok(total / cols as f64)
}

/// Product of a flip ratio and a contact ratio, both in `[0, 1]`.
pub fn nms_composite(flip_ratio: f64, contact_ratio: f64) -> Result<f64> {
    for (name, x) in [("flip_ratio", flip_ratio), ("contact_ratio", contact_ratio)] {
        if !(0.0..=1.0).contains(&x) {
            return Err(ZooError::OutOfRange(format!("{name} = {x}")));
        }
    }
    Ok(flip_ratio * contact_ratio)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub seed: u64,
    pub family: String,
    pub strength: Option<f64>,
    pub noise: String,
    pub d: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub n_cf: usize,
    pub nms_synth: f64,
    /// Generator choices that are ours rather than given: functional forms, ranges, query protocol.
    pub design: Vec<String>,
}

impl DatasetMetadata {
    pub fn of(bundle: &DatasetBundle) -> Self {
        let c = &bundle.config;
        Self {
            seed: c.seed,
            family: c.family.tag.to_string(),
            strength: c.family.strength,
            noise: c.noise.to_string(),
            d: c.d,
            n_train: c.n_train,
            n_test: c.n_test,
            n_cf: c.n_cf,
            nms_synth: bundle.nms_synth(),
            design: vec![
                "shift=tanh(linear), scale=max(softplus(a+amp*tanh(linear)),0.2), coefficients U(-1,1)".into(),
                format!("response=asym_sqrt_{RESPONSE_BEND}"),
                "thresholds=score quantile under ancestral sampling".into(),
                "queries=single-coordinate do, value from empirical train marginal".into(),
            ],
        }
    }
}

fn write_matrix(path: &Path, train: &Matrix, test: &Matrix, prefix: &str, d: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["split".to_string()];
    header.extend((0..d).map(|j| format!("{prefix}{j}")));
    w.write_record(&header)?;
    for (split, rows) in [("train", train), ("test", test)] {
        for row in rows {
            let mut rec = vec![split.to_string()];
            rec.extend(row.iter().map(|x| x.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `data.csv`, `latents.csv`, `queries.json` and `metadata.json` into `dir`.
pub fn write_dataset_dir(bundle: &DatasetBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_matrix(&dir.join("data.csv"), &bundle.v_train, &bundle.v_test, "v", bundle.d())?;
    write_matrix(&dir.join("latents.csv"), &bundle.u_train, &bundle.u_test, "u", bundle.d())?;
    fs::write(dir.join("queries.json"), serde_json::to_string_pretty(&bundle.cf_queries)?)?;
    fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&DatasetMetadata::of(bundle))?)?;
    Ok(())
}
