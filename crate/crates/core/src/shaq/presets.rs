//! Pinned training setups for the larger environments.

use super::state::{extract_policy, EpsSchedule, LrSchedule, ShaqConfig, ShaqMode, ShaqState};
use super::train::{evaluate_greedy, train, CurveRecord};
use crate::envs::feeder::{
    action_grid, droop_rollout, DiscreteFeeder, FeederMetrics, FeederModel, FeederTrace, DEFAULT_DROOP_SLOPE,
    DEFAULT_EPISODE_LEN,
};
use crate::envs::voltage::Barrier;
use crate::envs::{GridPredatorPrey, PredatorPreyConfig, TabularEnv};
use crate::error::Result;

pub const G1_STEPS: u64 = 10_000;

pub const PREDATOR_PREY_STEPS: u64 = 50_000;
pub const PREDATOR_PREY_EVAL_EPISODES: usize = 200;
pub const PREDATOR_PREY_SUCCESS: f64 = 0.9;

pub const FEEDER_STEPS: u64 = 100_000;
pub const FEEDER_GRID_POINTS: usize = 9;
pub const FEEDER_GAMMA: f64 = 0.0;

pub fn g1_config(mode: ShaqMode, seed: u64) -> ShaqConfig {
    ShaqConfig {
        mode,
        lr_q: LrSchedule { c: 0.5, d: 0.001 },
        epsilon: EpsSchedule { start: 1.0, end: 0.05, anneal_steps: 5_000 },
        seed,
        ..ShaqConfig::default()
    }
}

pub fn predator_prey_config(seed: u64) -> ShaqConfig {
    ShaqConfig {
        lr_q: LrSchedule::constant(0.2),
        lr_alpha: 0.01,
        epsilon: EpsSchedule { start: 1.0, end: 0.05, anneal_steps: PREDATOR_PREY_STEPS },
        seed,
        ..ShaqConfig::default()
    }
}

pub fn feeder_config(seed: u64) -> ShaqConfig {
    ShaqConfig {
        lr_q: LrSchedule::constant(0.1),
        lr_alpha: 0.01,
        alpha_max: 3.0,
        epsilon: EpsSchedule { start: 1.0, end: 0.05, anneal_steps: 70_000 },
        seed,
        ..ShaqConfig::default()
    }
}

#[derive(Debug, Clone)]
pub struct PredatorPreyRun {
    pub state: ShaqState,
    pub curve: Vec<CurveRecord>,
    /// Fraction of greedy evaluation episodes that end in a capture.
    pub capture_rate: f64,
}

pub fn run_predator_prey(config: ShaqConfig, steps: u64) -> Result<PredatorPreyRun> {
    let seed = config.seed;
    let mut env = GridPredatorPrey::new(PredatorPreyConfig::default())?;
    let mut state = ShaqState::new(env.actions_per_agent(), env.n_states(), env.gamma(), config)?;
    let curve = train(&mut env, &mut state, steps)?;
    let outcomes = evaluate_greedy(&mut env, &state, PREDATOR_PREY_EVAL_EPISODES, 1000 + seed)?;
    let captures = outcomes.iter().filter(|o| o.terminal).count();
    Ok(PredatorPreyRun { state, curve, capture_rate: captures as f64 / outcomes.len() as f64 })
}

/// The three-bus feeder on its benign half-day trace.
pub fn feeder_env(barrier: Barrier) -> Result<DiscreteFeeder> {
    let model = FeederModel::three_bus(barrier);
    let trace = FeederTrace::benign(&model, DEFAULT_EPISODE_LEN);
    DiscreteFeeder::new(model, trace, action_grid(FEEDER_GRID_POINTS, 1.0)?, DEFAULT_EPISODE_LEN, FEEDER_GAMMA)
}

#[derive(Debug, Clone)]
pub struct FeederRun {
    pub state: ShaqState,
    pub curve: Vec<CurveRecord>,
    /// Greedy joint action per step.
    pub policy: Vec<Vec<usize>>,
    pub learned: FeederMetrics,
    pub droop: FeederMetrics,
}

impl FeederRun {
    pub fn loss_ratio(&self) -> f64 {
        self.learned.power_loss() / self.droop.power_loss()
    }
}

pub fn run_feeder(mut env: DiscreteFeeder, config: ShaqConfig, steps: u64) -> Result<FeederRun> {
    let mut state = ShaqState::new(env.actions_per_agent(), env.n_states(), env.gamma(), config)?;
    let curve = train(&mut env, &mut state, steps)?;
    let per_agent = extract_policy(&state);
    let policy: Vec<Vec<usize>> = (0..env.len()).map(|t| per_agent.iter().map(|p| p[t]).collect()).collect();
    let learned = env.evaluate(&policy)?.metrics;
    let droop = droop_rollout(env.model(), env.trace(), env.len(), DEFAULT_DROOP_SLOPE)?.metrics;
    Ok(FeederRun { state, curve, policy, learned, droop })
}
