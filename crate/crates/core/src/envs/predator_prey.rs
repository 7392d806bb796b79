use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::tabular::{check_actions, EnvStep, TabularEnv};
use crate::error::{Error, Result};

pub const STAY: usize = 0;
pub const UP: usize = 1;
pub const DOWN: usize = 2;
pub const LEFT: usize = 3;
pub const RIGHT: usize = 4;
pub const CAPTURE: usize = 5;
pub const N_ACTIONS: usize = 6;

pub const CAPTURE_REWARD: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredatorPreyConfig {
    pub width: usize,
    pub height: usize,
    pub n_predators: usize,
    /// Reward for each predator that attempts a capture which fails.
    pub penalty: f64,
    pub episode_limit: usize,
    pub gamma: f64,
}

impl Default for PredatorPreyConfig {
    fn default() -> Self {
        Self { width: 4, height: 4, n_predators: 2, penalty: -1.0, episode_limit: 100, gamma: 0.95 }
    }
}

/// Predators hunt a uniformly random prey; the state encodes every position.
///
/// Cells are `y·width + x`; the state index is `Σ_k pos_k · cells^k` over
/// the predators followed by the prey.
#[derive(Debug, Clone)]
pub struct GridPredatorPrey {
    config: PredatorPreyConfig,
    actions: Vec<usize>,
    state: usize,
}

/// Successor distribution of one joint action.
#[derive(Debug, Clone, PartialEq)]
pub struct PreyOutcome {
    pub reward: f64,
    pub captured: bool,
    /// `(next state, probability)`; empty after a capture.
    pub successors: Vec<(usize, f64)>,
}

impl GridPredatorPrey {
    pub fn new(config: PredatorPreyConfig) -> Result<Self> {
        let cells = config.width * config.height;
        if config.width == 0 || config.height == 0 || config.n_predators < 2 {
            return Err(Error::InvalidArgument("need a nonempty grid and at least two predators".into()));
        }
        if config.n_predators + 1 > cells {
            return Err(Error::InvalidArgument("too many agents for the grid".into()));
        }
        if cells.checked_pow(config.n_predators as u32 + 1).is_none_or(|n| n > 1 << 24) {
            return Err(Error::Capacity("state space exceeds 2^24 positions".into()));
        }
        if !(config.penalty <= 0.0) || !(0.0..1.0).contains(&config.gamma) || config.episode_limit == 0 {
            return Err(Error::InvalidArgument("penalty must be ≤ 0, γ in [0,1), limit positive".into()));
        }
        Ok(Self { actions: vec![N_ACTIONS; config.n_predators], config, state: 0 })
    }

    pub fn config(&self) -> &PredatorPreyConfig {
        &self.config
    }

    pub fn cells(&self) -> usize {
        self.config.width * self.config.height
    }

    pub fn encode(&self, positions: &[usize]) -> usize {
        positions.iter().rev().fold(0, |acc, &p| acc * self.cells() + p)
    }

    /// Predator positions followed by the prey position.
    pub fn decode(&self, s: usize) -> Vec<usize> {
        let mut rest = s;
        (0..=self.config.n_predators)
            .map(|_| {
                let p = rest % self.cells();
                rest /= self.cells();
                p
            })
            .collect()
    }

    pub fn current_state(&self) -> usize {
        self.state
    }

    /// Start states: all agents on distinct cells.
    pub fn is_start_state(&self, s: usize) -> bool {
        let pos = self.decode(s);
        (0..pos.len()).all(|i| (i + 1..pos.len()).all(|j| pos[i] != pos[j]))
    }

    fn shift(&self, cell: usize, action: usize) -> usize {
        let (w, h) = (self.config.width, self.config.height);
        let (x, y) = (cell % w, cell / w);
        match action {
            UP if y + 1 < h => cell + w,
            DOWN if y > 0 => cell - w,
            LEFT if x > 0 => cell - 1,
            RIGHT if x + 1 < w => cell + 1,
            _ => cell,
        }
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        let w = self.config.width;
        let (ax, ay, bx, by) = (a % w, a / w, b % w, b / w);
        ax.abs_diff(bx) + ay.abs_diff(by) == 1
    }

    /// Reward and successor distribution of `actions` in state `s`.
    ///
    /// Captures resolve on the current positions; predators that attempt a
    /// capture do not move. The prey then picks uniformly among staying and
    /// its in-grid moves onto cells free of predators.
    pub fn outcome(&self, s: usize, actions: &[usize]) -> PreyOutcome {
        let pos = self.decode(s);
        let n = self.config.n_predators;
        let prey = pos[n];
        let attempts = (0..n).filter(|&k| actions[k] == CAPTURE && self.adjacent(pos[k], prey)).count();
        if attempts >= 2 {
            return PreyOutcome { reward: CAPTURE_REWARD, captured: true, successors: Vec::new() };
        }
        let reward = attempts as f64 * self.config.penalty;
        let mut next: Vec<usize> = (0..n).map(|k| self.shift(pos[k], actions[k])).collect();
        let predators = next.clone();
        let mut moves: Vec<usize> = [STAY, UP, DOWN, LEFT, RIGHT]
            .iter()
            .map(|&m| self.shift(prey, m))
            .filter(|&c| c == prey || !predators.contains(&c))
            .collect();
        moves.sort_unstable();
        moves.dedup();
        let p = 1.0 / moves.len() as f64;
        next.push(0);
        let successors = moves
            .into_iter()
            .map(|c| {
                next[n] = c;
                (self.encode(&next), p)
            })
            .collect();
        PreyOutcome { reward, captured: false, successors }
    }

    /// Optimal probability of a capture within `horizon` steps, per state.
    pub fn capture_probability(&self, horizon: usize) -> Vec<f64> {
        let ns = self.n_states();
        let n_joint = N_ACTIONS.pow(self.config.n_predators as u32);
        let mut value = vec![0.0; ns];
        let mut joint = vec![0usize; self.config.n_predators];
        for _ in 0..horizon {
            let next: Vec<f64> = (0..ns)
                .map(|s| {
                    let mut best = 0.0f64;
                    for a in 0..n_joint {
                        let mut rest = a;
                        for slot in joint.iter_mut() {
                            *slot = rest % N_ACTIONS;
                            rest /= N_ACTIONS;
                        }
                        let out = self.outcome(s, &joint);
                        let p = if out.captured {
                            1.0
                        } else {
                            out.successors.iter().map(|&(t, p)| p * value[t]).sum()
                        };
                        best = best.max(p);
                    }
                    best
                })
                .collect();
            value = next;
        }
        value
    }
}

impl TabularEnv for GridPredatorPrey {
    fn n_agents(&self) -> usize {
        self.config.n_predators
    }

    fn actions_per_agent(&self) -> &[usize] {
        &self.actions
    }

    fn n_states(&self) -> usize {
        self.cells().pow(self.config.n_predators as u32 + 1)
    }

    fn gamma(&self) -> f64 {
        self.config.gamma
    }

    fn episode_limit(&self) -> usize {
        self.config.episode_limit
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> usize {
        let mut pos: Vec<usize> = Vec::with_capacity(self.config.n_predators + 1);
        while pos.len() <= self.config.n_predators {
            let c = rng.gen_range(0..self.cells());
            if !pos.contains(&c) {
                pos.push(c);
            }
        }
        self.state = self.encode(&pos);
        self.state
    }

    fn step(&mut self, actions: &[usize], rng: &mut ChaCha8Rng) -> Result<EnvStep> {
        check_actions(actions, &self.actions)?;
        let out = self.outcome(self.state, actions);
        if out.captured {
            return Ok(EnvStep { next_state: self.state, reward: out.reward, terminal: true });
        }
        let pick = rng.gen_range(0..out.successors.len());
        self.state = out.successors[pick].0;
        Ok(EnvStep { next_state: self.state, reward: out.reward, terminal: false })
    }
}
