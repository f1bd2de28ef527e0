//! Balanced counterfactual query sampling on a toy latch environment with exact replay.

pub mod candidates;
pub mod env;
pub mod error;
pub mod select;
pub mod stats;

pub use candidates::{generate_candidates, CandidateQuery, Transition, Window};
pub use env::{simulate, toy_rollout, toy_rollouts, Exo, FactualRollout, State, Trajectory};
pub use error::{Result, SamplerError};
pub use select::{
    informative_filter, informative_threshold, sample_queries, select_balanced, SamplerConfig, Selection,
};
pub use stats::{query_stats, write_outputs, QueryStats, TransitionCounts};
