use std::fs;
use std::io::Write;
use std::path::Path;

use mechanism_zoo::DatasetBundle;
use scm_core::rng;
use serde::{Deserialize, Serialize};

use crate::error::{InverterError, Result};
use crate::flow::{log_from_slope, N_KNOTS};
use crate::linalg::{dot, ridge};
use crate::loss::{evaluate, sample_indices, GateUse, LossBatch, LossParts, LossWeights, TransportPenaltyConfig};
use crate::model::{GateMode, InverterModel, HEAD_SCORE, HEAD_SHIFT, HEAD_SLOPE};
use crate::optim::{self, clip_norm, Adam};

const RIDGE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateSchedule {
    /// Expected likelihood over the relaxed gate while training, hard gates at evaluation.
    RelaxedTrainHardEval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda_cyc: f64,
    pub lambda_tr: f64,
    pub lambda_ori: f64,
    pub learning_rate: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub gate_schedule: GateSchedule,
    /// Leading fraction of steps trained with hard, frozen gates.
    pub freeze_fraction: f64,
    /// Initialize gate scores from residual asymmetry before training.
    pub warm_start: bool,
    /// Initialize shift and flow scale heads by least squares before training.
    pub data_init: bool,
    pub trace_every: usize,
    /// Rescale the gradient to at most this Euclidean norm before the Adam update.
    pub grad_clip: Option<f64>,
    pub transport: TransportPenaltyConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda_cyc: 1.0,
            lambda_tr: 0.1,
            lambda_ori: 1e-3,
            learning_rate: 1e-2,
            steps: 2000,
            batch_size: 256,
            seed: 0,
            gate_schedule: GateSchedule::RelaxedTrainHardEval,
            freeze_fraction: 0.3,
            warm_start: true,
            data_init: true,
            trace_every: 50,
            grad_clip: Some(10.0),
            transport: TransportPenaltyConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    /// Pure likelihood training: every penalty weight zero.
    pub fn nll_only(self) -> Self {
        Self { lambda_cyc: 0.0, lambda_tr: 0.0, lambda_ori: 0.0, ..self }
    }

    pub fn weights(&self) -> LossWeights {
        LossWeights { cyc: self.lambda_cyc, tr: self.lambda_tr, ori: self.lambda_ori }
    }

    pub fn validate(&self) -> Result<()> {
        let lambdas = [self.lambda_cyc, self.lambda_tr, self.lambda_ori];
        if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(InverterError::Config(format!("penalty weights must be nonnegative: {lambdas:?}")));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0)
            || self.batch_size == 0
            || self.trace_every == 0
        {
            return Err(InverterError::Config("learning rate, batch size and trace interval must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.freeze_fraction) {
            return Err(InverterError::Config(format!("freeze fraction {} outside [0, 1]", self.freeze_fraction)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub total: f64,
    pub nll: f64,
    /// Likelihood of the same batch under hard gates; `nll_hard - nll` is the relaxation gap.
    pub nll_hard: f64,
    pub cyc: f64,
    pub tr: f64,
    pub ori: f64,
    /// Euclidean norm of the full gradient before any masking.
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTrace {
    pub rows: Vec<TraceRow>,
}

impl LossTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,total,nll,nll_hard,cyc,tr,ori,grad_norm\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.step, r.total, r.nll, r.nll_hard, r.cyc, r.tr, r.ori, r.grad_norm
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::File::create(path)?.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }
}

/// Serialized trained model with the configuration that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub model: InverterModel,
    pub config: TrainConfig,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

fn features_of(model: &InverterModel, i: usize, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter().map(|v| model.feature_map(i).eval(&v[..i])).collect()
}

/// Shift heads by ridge regression of `v_i` on features; every knot slope set to the residual sd.
pub fn init_least_squares(model: &mut InverterModel, rows: &[Vec<f64>]) -> Result<()> {
    for i in 0..model.d() {
        let feats = features_of(model, i, rows);
        let y: Vec<f64> = rows.iter().map(|v| v[i]).collect();
        let w = ridge(&feats, &y, None, RIDGE)?;
        let var = feats.iter().zip(&y).map(|(f, y)| (y - dot(&w, f)).powi(2)).sum::<f64>() / rows.len() as f64;
        let a = log_from_slope(var.sqrt().max(0.01));
        model.head_mut(i, HEAD_SHIFT).copy_from_slice(&w);
        for j in 0..N_KNOTS {
            let head = model.head_mut(i, HEAD_SLOPE + j);
            head.fill(0.0);
            head[0] = a;
        }
    }
    Ok(())
}

const WARM_ROUNDS: usize = 6;
const WARM_KDE_ROWS: usize = 3000;
const WARM_KDE_BANDWIDTH: f64 = 0.25;
const WARM_GRID: usize = 241;
const WARM_GRID_MAX: f64 = 6.0;
const WARM_WEIGHT_CAP: f64 = 3.0;

fn sign_labels(feats: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    feats.iter().map(|f| if dot(w, f) >= 0.0 { 1.0 } else { -1.0 }).collect()
}

fn interp(grid: &[f64], values: &[f64], x: f64) -> f64 {
    let step = grid[1] - grid[0];
    let pos = ((x - grid[0]) / step).clamp(0.0, (grid.len() - 1) as f64);
    let k = (pos as usize).min(grid.len() - 2);
    let t = pos - k as f64;
    values[k] * (1.0 - t) + values[k + 1] * t
}

/// Gate scores initialized from the sign of residual asymmetry.
///
/// Standardized residuals are regressed for skew to get initial labels, then refined by hard EM:
/// the density of the oriented residuals is estimated by a gaussian KDE and each row is labelled
/// by the log-likelihood ratio of `e` against `-e`. The final score is rescaled to mean magnitude 1.
pub fn warm_start_gates(model: &mut InverterModel, rows: &[Vec<f64>]) -> Result<()> {
    let grid: Vec<f64> =
        (0..WARM_GRID).map(|k| -WARM_GRID_MAX + 2.0 * WARM_GRID_MAX * k as f64 / (WARM_GRID - 1) as f64).collect();
    for i in 1..model.d() {
        if !model.has_gate(i) {
            continue;
        }
        let feats = features_of(model, i, rows);
        let y: Vec<f64> = rows.iter().map(|v| v[i]).collect();
        let wm = ridge(&feats, &y, None, RIDGE)?;
        let resid: Vec<f64> = feats.iter().zip(&y).map(|(f, y)| y - dot(&wm, f)).collect();
        let log_abs: Vec<f64> = resid.iter().map(|r| (r.abs() + 1e-6).ln()).collect();
        let wl = ridge(&feats, &log_abs, None, RIDGE)?;
        let mut e: Vec<f64> = feats.iter().zip(&resid).map(|(f, r)| r / dot(&wl, f).exp()).collect();
        let n = e.len() as f64;
        let mean = e.iter().sum::<f64>() / n;
        let sd = (e.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt().max(1e-12);
        e.iter_mut().for_each(|x| *x /= sd);

        let skew: Vec<f64> = e.iter().map(|x| x.powi(3).clamp(-30.0, 30.0)).collect();
        let mut ws = ridge(&feats, &skew, None, RIDGE)?;
        let mut labels = sign_labels(&feats, &ws);
        for _ in 0..WARM_ROUNDS {
            let oriented: Vec<f64> = labels.iter().zip(&e).take(WARM_KDE_ROWS).map(|(l, x)| l * x).collect();
            let log_dens: Vec<f64> = grid
                .iter()
                .map(|g| {
                    let s: f64 = oriented.iter().map(|o| (-0.5 * ((g - o) / WARM_KDE_BANDWIDTH).powi(2)).exp()).sum();
                    (s / oriented.len() as f64 + 1e-12).ln()
                })
                .collect();
            let llr: Vec<f64> = e.iter().map(|x| interp(&grid, &log_dens, *x) - interp(&grid, &log_dens, -x)).collect();
            let target: Vec<f64> = llr.iter().map(|l| if *l >= 0.0 { 1.0 } else { -1.0 }).collect();
            let weights: Vec<f64> = llr.iter().map(|l| l.abs().min(WARM_WEIGHT_CAP)).collect();
            ws = ridge(&feats, &target, Some(&weights), RIDGE)?;
            labels = sign_labels(&feats, &ws);
        }
        let scale = feats.iter().map(|f| dot(&ws, f).abs()).sum::<f64>() / n;
        if scale > 0.0 {
            ws.iter_mut().for_each(|w| *w /= scale);
        }
        model.head_mut(i, HEAD_SCORE).copy_from_slice(&ws);
    }
    Ok(())
}

/// Trains `model` on the observational training split of `bundle` (latents are never used).
pub fn train(
    mut model: InverterModel,
    bundle: &DatasetBundle,
    cfg: &TrainConfig,
) -> Result<(InverterModel, LossTrace)> {
    cfg.validate()?;
    let rows = &bundle.v_train;
    if rows.is_empty() {
        return Err(InverterError::EmptyBatch);
    }
    if rows[0].len() != model.d() {
        return Err(InverterError::Config(format!("data has {} columns, model {}", rows[0].len(), model.d())));
    }
    if cfg.data_init {
        init_least_squares(&mut model, rows)?;
    }
    let gated = model.gate_mode() == GateMode::Learned && model.d() > 1;
    if gated && cfg.warm_start {
        warm_start_gates(&mut model, rows)?;
    }

    let mut batches = rng::stream(cfg.seed, "batches");
    let mut penalties = rng::stream(cfg.seed, "penalties");
    let freeze_steps = if gated { (cfg.freeze_fraction * cfg.steps as f64).round() as usize } else { 0 };
    let score_params: Vec<usize> = (1..model.d())
        .flat_map(|i| (0..model.feature_map(i).dim()).map(move |t| (i, t)))
        .map(|(i, t)| model.param_index(i, HEAD_SCORE, t))
        .collect();
    let weights = cfg.weights();
    let mut adam = Adam::new(model.n_params(), cfg.learning_rate);
    let mut grad = vec![0.0; model.n_params()];
    let mut trace = LossTrace::default();

    for step in 0..cfg.steps {
        let frozen = step < freeze_steps;
        let gate_use = if frozen { GateUse::Hard } else { GateUse::Relaxed };
        let idx = sample_indices(rows.len(), cfg.batch_size, &mut batches);
        let batch = LossBatch::draw(idx.iter().map(|&k| rows[k].clone()).collect(), &cfg.transport, &mut penalties);
        let parts = evaluate(&model, &batch, &weights, gate_use, &cfg.transport, Some(&mut grad))?;
        if !parts.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(divergence(step, &parts));
        }
        if step % cfg.trace_every == 0 || step + 1 == cfg.steps {
            let hard = evaluate(&model, &batch, &weights, GateUse::Hard, &cfg.transport, None)?;
            trace.rows.push(TraceRow {
                step,
                total: parts.total,
                nll: parts.nll,
                nll_hard: hard.nll,
                cyc: parts.cyc,
                tr: parts.tr,
                ori: parts.ori,
                grad_norm: optim::norm(&grad),
            });
        }
        if let Some(limit) = cfg.grad_clip {
            clip_norm(&mut grad, limit);
        }
        if frozen {
            for &k in &score_params {
                grad[k] = 0.0;
            }
        }
        adam.step(model.theta_mut(), &grad);
    }
    Ok((model, trace))
}

fn divergence(step: usize, parts: &LossParts) -> InverterError {
    InverterError::Divergence { step, nll: parts.nll, transport: parts.tr, orientation: parts.ori }
}
