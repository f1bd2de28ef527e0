use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::candidates::{CandidateQuery, Transition};
use crate::error::Result;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TransitionCounts {
    pub ss: usize,
    pub sf: usize,
    pub fs: usize,
    pub ff: usize,
}

impl TransitionCounts {
    pub fn total(&self) -> usize {
        self.ss + self.sf + self.fs + self.ff
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryStats {
    pub query_count: usize,
    pub factual_success_rate: f64,
    pub cf_success_rate: f64,
    pub change_rate: f64,
    pub transition_counts: TransitionCounts,
    pub window_mean: f64,
}

impl QueryStats {
    /// `name & count & factual & cf & change & SS/SF/FS/FF`, rates to four decimals.
    pub fn table_row(&self, name: &str) -> String {
        let t = &self.transition_counts;
        format!(
            "{name} & {} & {:.4} & {:.4} & {:.4} & {}/{}/{}/{}",
            self.query_count, self.factual_success_rate, self.cf_success_rate, self.change_rate, t.ss, t.sf, t.fs, t.ff
        )
    }
}

pub fn query_stats(queries: &[CandidateQuery]) -> QueryStats {
    if queries.is_empty() {
        return QueryStats::default();
    }
    let n = queries.len() as f64;
    let rate = |f: &dyn Fn(&CandidateQuery) -> bool| queries.iter().filter(|q| f(q)).count() as f64 / n;
    let mut counts = TransitionCounts::default();
    for q in queries {
        match q.transition {
            Transition::SS => counts.ss += 1,
            Transition::SF => counts.sf += 1,
            Transition::FS => counts.fs += 1,
            Transition::FF => counts.ff += 1,
        }
    }
    QueryStats {
        query_count: queries.len(),
        factual_success_rate: rate(&|q| q.success),
        cf_success_rate: rate(&|q| q.cf_success),
        change_rate: rate(&|q| q.success_change),
        transition_counts: counts,
        window_mean: queries.iter().map(|q| q.window.length as f64).sum::<f64>() / n,
    }
}

/// Writes `queries.json` and `sampler_stats.json` into `dir`.
pub fn write_outputs(dir: &Path, queries: &[CandidateQuery]) -> Result<QueryStats> {
    fs::create_dir_all(dir)?;
    let stats = query_stats(queries);
    fs::write(dir.join("queries.json"), serde_json::to_string_pretty(queries)?)?;
    fs::write(dir.join("sampler_stats.json"), serde_json::to_string_pretty(&stats)?)?;
    Ok(stats)
}
