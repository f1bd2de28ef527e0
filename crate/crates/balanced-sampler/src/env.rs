//! A one-dimensional latch: an effector pushes a latch towards a goal angle, and the direction
//! the latch moves on contact depends on a hidden per-episode phase.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use scm_core::rng;
use serde::{Deserialize, Serialize};

pub const HORIZON: usize = 40;
pub const CONTACT_RADIUS: f64 = 0.08;
pub const GOAL_ANGLE: f64 = 0.5;
pub const GAIN: f64 = 0.15;
/// Free-space effector displacement per unit action.
pub const REACH: f64 = 0.25;
pub const EFFECTOR_START: f64 = -0.25;
pub const OFFSET_SCALE: f64 = 0.05;
pub const PUSH_RANGE: (f64, f64) = (0.05, 0.2);
pub const ACTION_NOISE: f64 = 0.1;

/// Per-episode exogenous state: start offset of the effector and the latch phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exo {
    pub offset: f64,
    pub phase: f64,
}

impl Exo {
    pub const ZERO: Exo = Exo { offset: 0.0, phase: 0.0 };

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.offset, self.phase]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub angle: f64,
    pub effector: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `HORIZON + 1` states, starting with the initial one.
    pub states: Vec<State>,
}

impl Trajectory {
    pub fn endpoint(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.angle)
    }

    pub fn success(&self) -> bool {
        self.endpoint() >= GOAL_ANGLE
    }
}

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Deterministic rollout of `actions` under `exo`.
pub fn simulate(actions: &[f64], exo: Exo) -> Trajectory {
    let mut s = State { angle: 0.0, effector: EFFECTOR_START + OFFSET_SCALE * exo.offset };
    let mut states = Vec::with_capacity(actions.len() + 1);
    states.push(s);
    let mut touching = false;
    let mut branch = 1.0;
    for &a in actions {
        let contact = (s.effector - s.angle).abs() < CONTACT_RADIUS;
        if contact && !touching {
            branch = sign(exo.phase) * sign(a);
        }
        if contact {
            s.angle += GAIN * a * branch;
            s.effector += GAIN * a;
        } else {
            s.effector += REACH * a;
        }
        touching = contact;
        states.push(s);
    }
    Trajectory { states }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactualRollout {
    pub factual_id: usize,
    pub states: Vec<State>,
    pub actions: Vec<f64>,
    pub exo: Exo,
    pub success: bool,
    pub endpoint: f64,
}

impl FactualRollout {
    pub fn new(factual_id: usize, actions: Vec<f64>, exo: Exo) -> Self {
        let traj = simulate(&actions, exo);
        Self { factual_id, success: traj.success(), endpoint: traj.endpoint(), states: traj.states, actions, exo }
    }

    pub fn replay(&self, actions: &[f64]) -> Trajectory {
        simulate(actions, self.exo)
    }
}

/// Random episode: exo from standard normals, actions `mu + 0.1 N(0, 1)` with `mu ~ U(0.05, 0.2)`.
pub fn toy_rollout(seed: u64) -> FactualRollout {
    toy_rollout_with_id(0, seed)
}

pub fn toy_rollout_with_id(factual_id: usize, seed: u64) -> FactualRollout {
    let mut r = rng::stream(seed, "latch-episode");
    let mut normal = || -> f64 { StandardNormal.sample(&mut r) };
    let exo = Exo { offset: normal(), phase: normal() };
    let mut r = rng::stream(seed, "latch-actions");
    let mu = r.random_range(PUSH_RANGE.0..PUSH_RANGE.1);
    let actions = (0..HORIZON)
        .map(|_| mu + ACTION_NOISE * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut r))
        .collect();
    FactualRollout::new(factual_id, actions, exo)
}

/// `n` episodes with ids `0..n`, episode `i` seeded by `derive_seed(seed, i)`.
pub fn toy_rollouts(n: usize, seed: u64) -> Vec<FactualRollout> {
    (0..n).map(|i| toy_rollout_with_id(i, rng::derive_seed(seed, i as u64))).collect()
}
