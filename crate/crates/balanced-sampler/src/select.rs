use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::candidates::{CandidateQuery, Transition};
use crate::error::{Result, SamplerError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub budget: usize,
    pub informative_percentile: f64,
    pub change_fraction: f64,
    pub transition_order: [Transition; 4],
}

impl SamplerConfig {
    pub fn new(budget: usize) -> Self {
        Self { budget, informative_percentile: 35.0, change_fraction: 0.5, transition_order: Transition::ORDER }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(SamplerError::Config("budget must be at least 1".into()));
        }
        if !(self.informative_percentile > 0.0 && self.informative_percentile <= 100.0) {
            return Err(SamplerError::Config(format!("percentile {} outside (0, 100]", self.informative_percentile)));
        }
        if !(0.0..=1.0).contains(&self.change_fraction) {
            return Err(SamplerError::Config(format!("change fraction {} outside [0, 1]", self.change_fraction)));
        }
        let mut seen = self.transition_order.to_vec();
        seen.sort();
        seen.dedup();
        if seen.len() != 4 {
            return Err(SamplerError::Config("transition order must list each label once".into()));
        }
        Ok(())
    }

    pub fn change_target(&self) -> usize {
        ((self.budget as f64) * self.change_fraction).ceil() as usize
    }
}

/// Nearest-rank percentile of the strictly positive endpoint deltas; `None` if there are none.
pub fn informative_threshold(pool: &[CandidateQuery], percentile: f64) -> Option<f64> {
    let mut positive: Vec<f64> = pool.iter().map(|c| c.endpoint_delta).filter(|d| *d > 0.0).collect();
    if positive.is_empty() {
        return None;
    }
    positive.sort_by(f64::total_cmp);
    let rank = ((percentile / 100.0) * positive.len() as f64).ceil().max(1.0) as usize;
    Some(positive[rank.min(positive.len()) - 1])
}

/// Keeps candidates that change the outcome or move the endpoint by more than the threshold.
/// An empty result means nothing in the pool is informative.
pub fn informative_filter(pool: &[CandidateQuery], cfg: &SamplerConfig) -> Result<Vec<CandidateQuery>> {
    if pool.is_empty() {
        return Err(SamplerError::EmptyPool);
    }
    cfg.validate()?;
    let threshold = informative_threshold(pool, cfg.informative_percentile);
    Ok(pool.iter().filter(|c| c.success_change || threshold.is_some_and(|t| c.endpoint_delta > t)).cloned().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub queries: Vec<CandidateQuery>,
    /// Set when the budget could not be reached under the one-per-factual rule.
    pub short: bool,
    /// Queries taken by round-robin before back-fill.
    pub round_robin: usize,
}

/// Descending delta, then ascending factual id, then pool position.
fn priority(pool: &[CandidateQuery], a: usize, b: usize) -> std::cmp::Ordering {
    let (x, y) = (&pool[a], &pool[b]);
    y.endpoint_delta.total_cmp(&x.endpoint_delta).then(x.factual_id.cmp(&y.factual_id)).then(a.cmp(&b))
}

struct RoundRobin {
    queues: Vec<VecDeque<usize>>,
}

impl RoundRobin {
    fn new(pool: &[CandidateQuery], order: &[Transition; 4], keep: impl Fn(&CandidateQuery) -> bool) -> Self {
        let queues = order
            .iter()
            .map(|t| {
                let mut idx: Vec<usize> =
                    (0..pool.len()).filter(|&i| pool[i].transition == *t && keep(&pool[i])).collect();
                idx.sort_by(|&a, &b| priority(pool, a, b));
                idx.into()
            })
            .collect();
        Self { queues }
    }

    /// Cycles over labels taking the best unused-factual candidate from each until `n` are taken
    /// or every label is exhausted.
    fn take(&mut self, pool: &[CandidateQuery], n: usize, used: &mut HashSet<usize>, out: &mut Vec<usize>) {
        let mut taken = 0;
        while taken < n {
            let mut progress = false;
            for q in &mut self.queues {
                if taken == n {
                    break;
                }
                while let Some(i) = q.pop_front() {
                    if used.insert(pool[i].factual_id) {
                        out.push(i);
                        taken += 1;
                        progress = true;
                        break;
                    }
                }
            }
            if !progress {
                break;
            }
        }
    }
}

/// Balanced selection over an informative pool: round-robin over transition labels within the
/// change and no-change subsets, at most one query per factual, then back-fill by priority.
pub fn select_balanced(pool: &[CandidateQuery], cfg: &SamplerConfig) -> Result<Selection> {
    cfg.validate()?;
    let mut used = HashSet::new();
    let mut picked = Vec::with_capacity(cfg.budget);

    let target = cfg.change_target().min(cfg.budget);
    RoundRobin::new(pool, &cfg.transition_order, |c| c.success_change).take(pool, target, &mut used, &mut picked);
    let rest = cfg.budget - picked.len();
    RoundRobin::new(pool, &cfg.transition_order, |c| !c.success_change).take(pool, rest, &mut used, &mut picked);
    let round_robin = picked.len();

    if picked.len() < cfg.budget {
        let chosen: HashSet<usize> = picked.iter().copied().collect();
        let mut remaining: Vec<usize> = (0..pool.len()).filter(|i| !chosen.contains(i)).collect();
        remaining.sort_by(|&a, &b| priority(pool, a, b));
        for i in remaining {
            if picked.len() == cfg.budget {
                break;
            }
            if used.insert(pool[i].factual_id) {
                picked.push(i);
            }
        }
    }

    Ok(Selection {
        short: picked.len() < cfg.budget,
        round_robin,
        queries: picked.into_iter().map(|i| pool[i].clone()).collect(),
    })
}

/// Filter then select.
pub fn sample_queries(pool: &[CandidateQuery], cfg: &SamplerConfig) -> Result<Selection> {
    select_balanced(&informative_filter(pool, cfg)?, cfg)
}
