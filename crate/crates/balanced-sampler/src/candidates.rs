use std::fmt;

use rand::Rng as _;
use rayon::prelude::*;
use scm_core::rng;
use serde::{Deserialize, Serialize};

use crate::env::FactualRollout;
use crate::error::{Result, SamplerError};

pub const MAX_WINDOW: usize = 8;
pub const PERTURBATION_RANGE: f64 = 0.8;

/// Factual to counterfactual outcome: `S` success, `F` failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Transition {
    SS,
    SF,
    FS,
    FF,
}

impl Transition {
    pub const ORDER: [Transition; 4] = [Transition::SS, Transition::SF, Transition::FS, Transition::FF];

    pub fn of(factual: bool, counterfactual: bool) -> Self {
        match (factual, counterfactual) {
            (true, true) => Transition::SS,
            (true, false) => Transition::SF,
            (false, true) => Transition::FS,
            (false, false) => Transition::FF,
        }
    }

    pub fn is_change(self) -> bool {
        matches!(self, Transition::SF | Transition::FS)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Transition::SS => "S->S",
            Transition::SF => "S->F",
            Transition::FS => "F->S",
            Transition::FF => "F->F",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: usize,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateQuery {
    pub factual_id: usize,
    pub window: Window,
    /// Offset added to every action inside the window.
    pub perturbation: f64,
    pub actions: Vec<f64>,
    pub success: bool,
    pub cf_endpoint: f64,
    pub cf_success: bool,
    pub transition: Transition,
    pub success_change: bool,
    pub endpoint_delta: f64,
}

impl CandidateQuery {
    /// Replays `rollout` with `perturbation` added to the actions in `window`.
    pub fn evaluate(rollout: &FactualRollout, window: Window, perturbation: f64) -> Self {
        let mut actions = rollout.actions.clone();
        let end = (window.start + window.length).min(actions.len());
        for a in &mut actions[window.start.min(end)..end] {
            *a += perturbation;
        }
        let traj = rollout.replay(&actions);
        let cf_success = traj.success();
        let cf_endpoint = traj.endpoint();
        Self {
            factual_id: rollout.factual_id,
            window,
            perturbation,
            actions,
            success: rollout.success,
            cf_endpoint,
            cf_success,
            transition: Transition::of(rollout.success, cf_success),
            success_change: rollout.success != cf_success,
            endpoint_delta: (cf_endpoint - rollout.endpoint).abs(),
        }
    }
}

/// `per_rollout` random window perturbations of each rollout, evaluated by exact replay.
/// Rollout `k` draws from `derive_seed(seed, factual_id)`, so the pool is independent of thread count.
pub fn generate_candidates(rollouts: &[FactualRollout], per_rollout: usize, seed: u64) -> Result<Vec<CandidateQuery>> {
    if per_rollout == 0 {
        return Err(SamplerError::Config("per_rollout must be at least 1".into()));
    }
    let pool = rollouts
        .par_iter()
        .map(|r| {
            let mut g = rng::stream(rng::derive_seed(seed, r.factual_id as u64), "candidates");
            let horizon = r.actions.len().max(1);
            (0..per_rollout)
                .map(|_| {
                    let length = g.random_range(1..=MAX_WINDOW.min(horizon));
                    let start = g.random_range(0..=horizon - length);
                    let delta = g.random_range(-PERTURBATION_RANGE..PERTURBATION_RANGE);
                    CandidateQuery::evaluate(r, Window { start, length }, delta)
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();
    Ok(pool.into_iter().flatten().collect())
}
