use std::path::Path;

use serde::{Deserialize, Serialize};

use super::coalition::{CoalitionMask, MAX_AGENTS};
use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;

/// Finite tabular MDP view consumed by the dynamic-programming solvers.
pub trait TabularMdp {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn gamma(&self) -> f64;
    fn reward(&self, s: usize, a: usize) -> f64;
    fn transition_row(&self, s: usize, a: usize) -> &[f64];
}

/// A cooperative Markov game with a single global reward.
///
/// Joint actions are indexed row-major over agents with agent 0 varying
/// fastest. Transitions are stored densely as `[s][a_joint][s']` and rewards
/// as `[s][a_joint]`. The reward seen by every solver is the stored reward
/// plus `reward_shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovConvexGame {
    n_states: usize,
    actions_per_agent: Vec<usize>,
    null_action: Vec<usize>,
    strides: Vec<usize>,
    n_joint: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
    gamma: f64,
    reward_shift: f64,
}

impl MarkovConvexGame {
    /// Builds a game from flat tables. Null actions default to index 0.
    pub fn new(
        n_states: usize,
        actions_per_agent: Vec<usize>,
        transition: Vec<f64>,
        reward: Vec<f64>,
        gamma: f64,
    ) -> Result<Self> {
        let n = actions_per_agent.len();
        Self::with_details(n_states, actions_per_agent, vec![0; n], transition, reward, gamma, 0.0)
    }

    pub fn with_details(
        n_states: usize,
        actions_per_agent: Vec<usize>,
        null_action: Vec<usize>,
        transition: Vec<f64>,
        reward: Vec<f64>,
        gamma: f64,
        reward_shift: f64,
    ) -> Result<Self> {
        if actions_per_agent.is_empty() {
            return Err(Error::InvalidGame("a game needs at least one agent".into()));
        }
        if actions_per_agent.len() > MAX_AGENTS {
            return Err(Error::Capacity(format!(
                "{} agents exceeds the {MAX_AGENTS}-agent limit",
                actions_per_agent.len()
            )));
        }
        let mut strides = Vec::with_capacity(actions_per_agent.len());
        let mut n_joint = 1usize;
        for &k in &actions_per_agent {
            if k == 0 {
                return Err(Error::InvalidGame("every agent needs at least one action".into()));
            }
            strides.push(n_joint);
            n_joint = n_joint
                .checked_mul(k)
                .ok_or_else(|| Error::Capacity("joint action space overflows usize".into()))?;
        }
        let game = Self {
            n_states,
            actions_per_agent,
            null_action,
            strides,
            n_joint,
            transition,
            reward,
            gamma,
            reward_shift,
        };
        game.validate()?;
        Ok(game)
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 {
            return Err(Error::InvalidGame("a game needs at least one state".into()));
        }
        // gamma = 0 is admitted as the myopic case.
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidGame(format!("gamma {} must lie in [0, 1)", self.gamma)));
        }
        if !(self.reward_shift >= 0.0 && self.reward_shift.is_finite()) {
            return Err(Error::InvalidGame(format!(
                "reward_shift {} must be a nonnegative real",
                self.reward_shift
            )));
        }
        if self.null_action.len() != self.n_agents() {
            return Err(Error::InvalidGame(format!(
                "null_action has {} entries for {} agents",
                self.null_action.len(),
                self.n_agents()
            )));
        }
        for (i, (&a, &k)) in self.null_action.iter().zip(&self.actions_per_agent).enumerate() {
            if a >= k {
                return Err(Error::InvalidGame(format!(
                    "null action {a} of agent {i} is outside 0..{k}"
                )));
            }
        }
        let rows = self.n_states * self.n_joint;
        if self.reward.len() != rows {
            return Err(Error::InvalidGame(format!(
                "reward table has {} entries, expected {rows}",
                self.reward.len()
            )));
        }
        if self.transition.len() != rows * self.n_states {
            return Err(Error::InvalidGame(format!(
                "transition table has {} entries, expected {}",
                self.transition.len(),
                rows * self.n_states
            )));
        }
        if let Some(r) = self.reward.iter().find(|r| !r.is_finite()) {
            return Err(Error::InvalidGame(format!("non-finite reward {r}")));
        }
        for s in 0..self.n_states {
            for a in 0..self.n_joint {
                let row = self.transition_row(s, a);
                if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                    return Err(Error::InvalidGame(format!(
                        "transition row (s={s}, a={a}) has an entry outside [0, 1]"
                    )));
                }
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidGame(format!(
                        "transition row (s={s}, a={a}) sums to {total}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Core and convexity analysis assume rewards in `[0, inf)` after the shift.
    pub fn ensure_nonnegative_rewards(&self) -> Result<()> {
        let min = self.reward.iter().copied().fold(f64::INFINITY, f64::min) + self.reward_shift;
        if min < 0.0 {
            return Err(Error::InvalidGame(format!(
                "minimum shifted reward {min} is negative; raise reward_shift to at least {}",
                self.reward_shift - min
            )));
        }
        Ok(())
    }

    pub fn n_agents(&self) -> usize {
        self.actions_per_agent.len()
    }

    pub fn n_joint_actions(&self) -> usize {
        self.n_joint
    }

    pub fn actions_per_agent(&self) -> &[usize] {
        &self.actions_per_agent
    }

    pub fn null_action(&self) -> &[usize] {
        &self.null_action
    }

    pub fn reward_shift(&self) -> f64 {
        self.reward_shift
    }

    pub fn grand(&self) -> CoalitionMask {
        CoalitionMask::grand(self.n_agents())
    }

    /// Stored reward without the shift.
    pub fn raw_reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_joint + a]
    }

    pub fn joint_index(&self, actions: &[usize]) -> usize {
        debug_assert_eq!(actions.len(), self.n_agents());
        actions.iter().zip(&self.strides).map(|(a, st)| a * st).sum()
    }

    pub fn decode_joint(&self, joint: usize) -> Vec<usize> {
        self.actions_per_agent
            .iter()
            .zip(&self.strides)
            .map(|(k, st)| (joint / st) % k)
            .collect()
    }

    /// Action of `agent` inside joint action `joint`.
    pub fn agent_action(&self, joint: usize, agent: usize) -> usize {
        (joint / self.strides[agent]) % self.actions_per_agent[agent]
    }

    /// Joint action with every agent at its null action.
    pub fn null_joint(&self) -> usize {
        self.joint_index(&self.null_action)
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        let mut g = self.clone();
        g.gamma = gamma;
        g.validate()?;
        Ok(g)
    }

    pub fn with_reward_shift(&self, shift: f64) -> Result<Self> {
        let mut g = self.clone();
        g.reward_shift = shift;
        g.validate()?;
        Ok(g)
    }

    /// True when agent `i` never changes the reward or the transition row.
    pub fn is_dummy(&self, i: usize) -> bool {
        let k = self.actions_per_agent[i];
        let st = self.strides[i];
        (0..self.n_states).all(|s| {
            (0..self.n_joint).filter(|&a| self.agent_action(a, i) == 0).all(|base| {
                (1..k).all(|ai| {
                    let other = base + ai * st;
                    (self.raw_reward(s, base) - self.raw_reward(s, other)).abs() <= 1e-12
                        && self
                            .transition_row(s, base)
                            .iter()
                            .zip(self.transition_row(s, other))
                            .all(|(p, q)| (p - q).abs() <= 1e-12)
                })
            })
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: GameFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_file(&self) -> GameFile {
        GameFile::from(self)
    }
}

impl TabularMdp for MarkovConvexGame {
    fn n_states(&self) -> usize {
        self.n_states
    }

    fn n_actions(&self) -> usize {
        self.n_joint
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_joint + a] + self.reward_shift
    }

    fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_joint + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }
}

/// On-disk JSON layout of a game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub n_agents: usize,
    pub actions_per_agent: Vec<usize>,
    #[serde(default)]
    pub null_action: Option<Vec<usize>>,
    pub n_states: usize,
    pub gamma: f64,
    /// `transition[s][a_joint][s']`
    pub transition: Vec<Vec<Vec<f64>>>,
    /// `reward[s][a_joint]`
    pub reward: Vec<Vec<f64>>,
    #[serde(default)]
    pub reward_shift: f64,
}

impl TryFrom<GameFile> for MarkovConvexGame {
    type Error = Error;

    fn try_from(f: GameFile) -> Result<Self> {
        if f.actions_per_agent.len() != f.n_agents {
            return Err(Error::InvalidGame(format!(
                "n_agents is {} but actions_per_agent has {} entries",
                f.n_agents,
                f.actions_per_agent.len()
            )));
        }
        if f.transition.len() != f.n_states || f.reward.len() != f.n_states {
            return Err(Error::InvalidGame("outer table dimension must equal n_states".into()));
        }
        let null_action = f.null_action.unwrap_or_else(|| vec![0; f.n_agents]);
        let transition = f.transition.into_iter().flatten().flatten().collect();
        let reward = f.reward.into_iter().flatten().collect();
        MarkovConvexGame::with_details(
            f.n_states,
            f.actions_per_agent,
            null_action,
            transition,
            reward,
            f.gamma,
            f.reward_shift,
        )
    }
}

impl From<&MarkovConvexGame> for GameFile {
    fn from(g: &MarkovConvexGame) -> Self {
        let transition = (0..g.n_states)
            .map(|s| (0..g.n_joint).map(|a| g.transition_row(s, a).to_vec()).collect())
            .collect();
        let reward = (0..g.n_states)
            .map(|s| (0..g.n_joint).map(|a| g.raw_reward(s, a)).collect())
            .collect();
        GameFile {
            n_agents: g.n_agents(),
            actions_per_agent: g.actions_per_agent.clone(),
            null_action: Some(g.null_action.clone()),
            n_states: g.n_states,
            gamma: g.gamma,
            transition,
            reward,
            reward_shift: g.reward_shift,
        }
    }
}
