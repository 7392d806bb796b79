use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{argmax, max_of};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShaqMode {
    Shaq,
    /// `δ ≡ 1`: additive value decomposition.
    Vdn,
}

/// `lr(t) = c / (1 + t·d)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub c: f64,
    pub d: f64,
}

impl LrSchedule {
    pub fn constant(c: f64) -> Self {
        Self { c, d: 0.0 }
    }

    pub fn at(&self, t: u64) -> f64 {
        self.c / (1.0 + t as f64 * self.d)
    }
}

/// Linear decay from `start` to `end` over `anneal_steps`, then constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsSchedule {
    pub start: f64,
    pub end: f64,
    pub anneal_steps: u64,
}

impl EpsSchedule {
    pub fn at(&self, step: u64) -> f64 {
        if self.anneal_steps == 0 || step >= self.anneal_steps {
            return self.end;
        }
        self.start + (self.end - self.start) * step as f64 / self.anneal_steps as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShaqConfig {
    pub mode: ShaqMode,
    pub lr_q: LrSchedule,
    pub lr_alpha: f64,
    pub alpha_max: f64,
    pub epsilon: EpsSchedule,
    pub seed: u64,
    /// Uniform replay capacity; 0 trains purely online.
    pub replay_capacity: usize,
}

impl Default for ShaqConfig {
    fn default() -> Self {
        Self {
            mode: ShaqMode::Shaq,
            lr_q: LrSchedule { c: 0.5, d: 0.01 },
            lr_alpha: 0.01,
            alpha_max: 10.0,
            epsilon: EpsSchedule { start: 1.0, end: 0.05, anneal_steps: 10_000 },
            seed: 0,
            replay_capacity: 0,
        }
    }
}

impl ShaqConfig {
    pub fn validate(&self) -> Result<()> {
        let eps_ok = |e: f64| (0.0..=1.0).contains(&e);
        if !(self.lr_q.c > 0.0) || !(self.lr_q.d >= 0.0) || !(self.lr_alpha >= 0.0) {
            return Err(Error::InvalidArgument("learning rates must be nonnegative, lr_q.c positive".into()));
        }
        if !(self.alpha_max >= 1.0) || !self.alpha_max.is_finite() {
            return Err(Error::InvalidArgument(format!("alpha_max must be at least 1, got {}", self.alpha_max)));
        }
        if !eps_ok(self.epsilon.start) || !eps_ok(self.epsilon.end) {
            return Err(Error::InvalidArgument("epsilon must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// One observed transition with a global reward.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: usize,
    pub actions: Vec<usize>,
    pub reward: f64,
    pub next: usize,
    pub terminal: bool,
}

#[derive(Debug, Clone)]
pub struct ShaqState {
    /// `q[i][s][a_i]`
    pub q: Vec<Vec<Vec<f64>>>,
    /// `alpha[i][s][a_i]`, within `[1, alpha_max]`.
    pub alpha: Vec<Vec<Vec<f64>>>,
    pub config: ShaqConfig,
    pub gamma: f64,
    pub actions_per_agent: Vec<usize>,
    pub steps: u64,
    visits: Vec<u64>,
    pub(crate) rng: ChaCha8Rng,
}

impl ShaqState {
    pub fn new(actions_per_agent: &[usize], n_states: usize, gamma: f64, mut config: ShaqConfig) -> Result<Self> {
        config.validate()?;
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidArgument(format!("discount {gamma} must lie in [0, 1)")));
        }
        if config.mode == ShaqMode::Vdn {
            config.lr_alpha = 0.0;
        }
        let table = |x: f64| -> Vec<Vec<Vec<f64>>> {
            actions_per_agent.iter().map(|&k| vec![vec![x; k]; n_states]).collect()
        };
        let n_joint: usize = actions_per_agent.iter().product();
        Ok(Self {
            q: table(0.0),
            alpha: table(1.0),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            gamma,
            actions_per_agent: actions_per_agent.to_vec(),
            steps: 0,
            visits: vec![0; n_states * n_joint],
        })
    }

    pub fn n_agents(&self) -> usize {
        self.q.len()
    }

    pub fn epsilon(&self) -> f64 {
        self.config.epsilon.at(self.steps)
    }

    fn joint_index(&self, actions: &[usize]) -> usize {
        actions.iter().zip(&self.actions_per_agent).rev().fold(0, |acc, (&a, &k)| acc * k + a)
    }

    pub fn visits(&self, s: usize, actions: &[usize]) -> u64 {
        let n_joint: usize = self.actions_per_agent.iter().product();
        self.visits[s * n_joint + self.joint_index(actions)]
    }

    /// Per-agent ε-greedy actions with independent exploration draws.
    pub fn act(&mut self, s: usize) -> Vec<usize> {
        let eps = self.epsilon();
        (0..self.n_agents())
            .map(|i| {
                if self.rng.gen::<f64>() < eps {
                    self.rng.gen_range(0..self.actions_per_agent[i])
                } else {
                    argmax(&self.q[i][s])
                }
            })
            .collect()
    }
}

/// `1` for the agent's greedy action (lowest index on ties), otherwise `α_i(s, a_i)`.
pub fn delta_coefficient(state: &ShaqState, s: usize, i: usize, a_i: usize) -> f64 {
    if state.config.mode == ShaqMode::Vdn || a_i == argmax(&state.q[i][s]) {
        1.0
    } else {
        state.alpha[i][s][a_i]
    }
}

/// `Δ = R + γ Σ_i max q_i(s')(1 - terminal) - Σ_i δ_i q_i(s, a_i)`
pub fn shaq_td_error(state: &ShaqState, t: &Transition) -> f64 {
    let n = state.n_agents();
    let bootstrap = if t.terminal { 0.0 } else { (0..n).map(|i| max_of(&state.q[i][t.next])).sum::<f64>() };
    let prediction: f64 = (0..n)
        .map(|i| delta_coefficient(state, t.s, i, t.actions[i]) * state.q[i][t.s][t.actions[i]])
        .sum();
    t.reward + state.gamma * bootstrap - prediction
}

/// One stochastic update; returns the TD error it used.
///
/// `q_i += lr·Δ·δ_i/n`, and for sub-optimal actions `α_i += lr_α·Δ·q_i`
/// clamped to `[1, alpha_max]`.
pub fn shaq_step(state: &mut ShaqState, t: &Transition) -> f64 {
    let n = state.n_agents();
    let delta = shaq_td_error(state, t);
    let n_joint: usize = state.actions_per_agent.iter().product();
    let slot = t.s * n_joint + state.joint_index(&t.actions);
    let lr = state.config.lr_q.at(state.visits[slot]);
    state.visits[slot] += 1;
    let coefficients: Vec<f64> = (0..n).map(|i| delta_coefficient(state, t.s, i, t.actions[i])).collect();
    let greedy: Vec<usize> = (0..n).map(|i| argmax(&state.q[i][t.s])).collect();
    for i in 0..n {
        let a = t.actions[i];
        let q_old = state.q[i][t.s][a];
        state.q[i][t.s][a] += lr * delta * coefficients[i] / n as f64;
        if state.config.mode == ShaqMode::Shaq && a != greedy[i] {
            let alpha = &mut state.alpha[i][t.s][a];
            *alpha = (*alpha + state.config.lr_alpha * delta * q_old).clamp(1.0, state.config.alpha_max);
        }
    }
    delta
}

/// `policy[i][s]`, lowest index on ties.
pub fn extract_policy(state: &ShaqState) -> Vec<Vec<usize>> {
    state.q.iter().map(|qi| qi.iter().map(|row| argmax(row)).collect()).collect()
}
