//! Balanced query selection on the toy latch environment.

use balanced_sampler::{
    generate_candidates, informative_filter, query_stats, select_balanced, toy_rollouts, CandidateQuery, QueryStats,
    SamplerConfig, Selection,
};
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerDemoConfig {
    pub rollouts: usize,
    pub per_rollout: usize,
    pub budget: usize,
    pub seed: u64,
}

impl Default for SamplerDemoConfig {
    fn default() -> Self {
        Self { rollouts: 50, per_rollout: 8, budget: 32, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerOutcome {
    pub pool: Vec<CandidateQuery>,
    pub informative: Vec<CandidateQuery>,
    pub selection: Selection,
    pub stats: QueryStats,
}

/// Flat CSV row for one selected query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRow {
    pub factual_id: usize,
    pub window_start: usize,
    pub window_length: usize,
    pub perturbation: f64,
    pub success: bool,
    pub cf_success: bool,
    pub transition: String,
    pub endpoint_delta: f64,
}

impl From<&CandidateQuery> for QueryRow {
    fn from(q: &CandidateQuery) -> Self {
        Self {
            factual_id: q.factual_id,
            window_start: q.window.start,
            window_length: q.window.length,
            perturbation: q.perturbation,
            success: q.success,
            cf_success: q.cf_success,
            transition: q.transition.to_string(),
            endpoint_delta: q.endpoint_delta,
        }
    }
}

pub fn run_sampler(cfg: &SamplerDemoConfig) -> Result<SamplerOutcome> {
    let rollouts = toy_rollouts(cfg.rollouts, cfg.seed);
    let pool = generate_candidates(&rollouts, cfg.per_rollout, cfg.seed)?;
    let scfg = SamplerConfig::new(cfg.budget);
    let informative = informative_filter(&pool, &scfg)?;
    let selection = select_balanced(&informative, &scfg)?;
    let stats = query_stats(&selection.queries);
    Ok(SamplerOutcome { pool, informative, selection, stats })
}
