use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mcg::{MarkovConvexGame, TabularMdp};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvStep {
    pub next_state: usize,
    pub reward: f64,
    /// True only for genuine episode ends; step limits are truncations.
    pub terminal: bool,
}

/// Episodic multi-agent environment with a finite state index and a global reward.
pub trait TabularEnv {
    fn n_agents(&self) -> usize;
    fn actions_per_agent(&self) -> &[usize];
    fn n_states(&self) -> usize;
    fn gamma(&self) -> f64;
    /// Steps after which an episode is truncated.
    fn episode_limit(&self) -> usize;
    fn reset(&mut self, rng: &mut ChaCha8Rng) -> usize;
    fn step(&mut self, actions: &[usize], rng: &mut ChaCha8Rng) -> Result<EnvStep>;
    /// State whose Q-values are logged in learning curves.
    fn probe_state(&self) -> usize {
        0
    }
}

pub(crate) fn check_actions(actions: &[usize], limits: &[usize]) -> Result<()> {
    if actions.len() != limits.len() {
        return Err(Error::Env(format!("{} actions for {} agents", actions.len(), limits.len())));
    }
    if let Some((i, a)) = actions.iter().enumerate().find(|(i, a)| **a >= limits[*i]) {
        return Err(Error::Env(format!("action {a} of agent {i} is outside 0..{}", limits[i])));
    }
    Ok(())
}

/// A Markov game played in episodes from a fixed start state.
#[derive(Debug, Clone)]
pub struct GameEnv {
    game: MarkovConvexGame,
    start: usize,
    terminal: Vec<bool>,
    limit: usize,
    state: usize,
}

impl GameEnv {
    /// Episodes start at `start`; absorbing states that pay nothing end them.
    pub fn episodic(game: MarkovConvexGame, start: usize, limit: usize) -> Result<Self> {
        if start >= game.n_states() || limit == 0 {
            return Err(Error::InvalidArgument("start state and episode limit must be valid".into()));
        }
        let na = game.n_joint_actions();
        let terminal = (0..game.n_states())
            .map(|s| (0..na).all(|a| game.transition_row(s, a)[s] == 1.0 && game.reward(s, a) == 0.0))
            .collect();
        Ok(Self { game, start, terminal, limit, state: start })
    }

    pub fn game(&self) -> &MarkovConvexGame {
        &self.game
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }
}

impl TabularEnv for GameEnv {
    fn n_agents(&self) -> usize {
        self.game.n_agents()
    }

    fn actions_per_agent(&self) -> &[usize] {
        self.game.actions_per_agent()
    }

    fn n_states(&self) -> usize {
        self.game.n_states()
    }

    fn gamma(&self) -> f64 {
        self.game.gamma()
    }

    fn episode_limit(&self) -> usize {
        self.limit
    }

    fn reset(&mut self, _rng: &mut ChaCha8Rng) -> usize {
        self.state = self.start;
        self.state
    }

    fn step(&mut self, actions: &[usize], rng: &mut ChaCha8Rng) -> Result<EnvStep> {
        check_actions(actions, self.game.actions_per_agent())?;
        let a = self.game.joint_index(actions);
        let reward = self.game.reward(self.state, a);
        let row = self.game.transition_row(self.state, a);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut next = row.len() - 1;
        for (s, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                next = s;
                break;
            }
        }
        self.state = next;
        Ok(EnvStep { next_state: next, reward, terminal: self.terminal[next] })
    }

    fn probe_state(&self) -> usize {
        self.start
    }
}
