use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcg::{CoalitionMask, GameFile, MarkovConvexGame, TabularMdp};

/// A Markov game observed through per-agent noisy observations.
///
/// Each coalition structure (a partition of the agents) has its own
/// observation kernel `Ω(o | s', a)`, stored as `obs_prob[tag][(s'·|A| + a)·|O| + o]`.
#[derive(Debug, Clone)]
pub struct Pomcg {
    base: MarkovConvexGame,
    observations_per_agent: Vec<usize>,
    n_obs: usize,
    obs_prob: Vec<Vec<f64>>,
    initial: Vec<f64>,
    cs_tags: Vec<Vec<CoalitionMask>>,
}

impl Pomcg {
    pub fn new(
        base: MarkovConvexGame,
        observations_per_agent: Vec<usize>,
        obs_prob: Vec<Vec<f64>>,
        initial: Vec<f64>,
        cs_tags: Vec<Vec<CoalitionMask>>,
    ) -> Result<Self> {
        let n_obs = observations_per_agent.iter().product();
        let p = Self { base, observations_per_agent, n_obs, obs_prob, initial, cs_tags };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let n = self.base.n_agents();
        let (ns, na) = (self.base.n_states(), self.base.n_joint_actions());
        if self.observations_per_agent.len() != n || self.observations_per_agent.contains(&0) {
            return Err(Error::InvalidGame("every agent needs at least one observation".into()));
        }
        if self.cs_tags.is_empty() || self.obs_prob.len() != self.cs_tags.len() {
            return Err(Error::InvalidGame("need one observation kernel per coalition structure".into()));
        }
        for (t, cs) in self.cs_tags.iter().enumerate() {
            let mut covered = CoalitionMask::empty(n);
            for c in cs {
                if c.n_agents() != n || c.is_empty() || !c.is_disjoint(covered) {
                    return Err(Error::InvalidGame(format!("coalition structure {t} is not a partition")));
                }
                covered = covered.union(*c);
            }
            if !covered.is_grand() {
                return Err(Error::InvalidGame(format!("coalition structure {t} does not cover every agent")));
            }
        }
        for (t, table) in self.obs_prob.iter().enumerate() {
            if table.len() != ns * na * self.n_obs {
                return Err(Error::Shape(format!("observation kernel {t} has {} entries", table.len())));
            }
            for (row, probs) in table.chunks(self.n_obs).enumerate() {
                let total: f64 = probs.iter().sum();
                if probs.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidGame(format!(
                        "observation row {row} of kernel {t} is not a distribution (sum {total})"
                    )));
                }
            }
        }
        let total: f64 = self.initial.iter().sum();
        if self.initial.len() != ns || self.initial.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidGame("initial state distribution must be a distribution".into()));
        }
        Ok(())
    }

    pub fn base(&self) -> &MarkovConvexGame {
        &self.base
    }

    pub fn n_agents(&self) -> usize {
        self.base.n_agents()
    }

    pub fn n_states(&self) -> usize {
        self.base.n_states()
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn observations_per_agent(&self) -> &[usize] {
        &self.observations_per_agent
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn cs_tags(&self) -> &[Vec<CoalitionMask>] {
        &self.cs_tags
    }

    /// `Ω(o | s', a)` under coalition structure `tag`.
    pub fn obs_row(&self, tag: usize, s_next: usize, joint: usize) -> &[f64] {
        let start = (s_next * self.base.n_joint_actions() + joint) * self.n_obs;
        &self.obs_prob[tag][start..start + self.n_obs]
    }

    /// First coalition structure containing `c` as a block, else structure 0.
    pub fn tag_for(&self, c: CoalitionMask) -> usize {
        self.cs_tags.iter().position(|cs| cs.contains(&c)).unwrap_or(0)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: PomcgFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_file(&self) -> PomcgFile {
        let (ns, na) = (self.n_states(), self.base.n_joint_actions());
        PomcgFile {
            game: self.base.to_file(),
            observations_per_agent: self.observations_per_agent.clone(),
            obs_prob: (0..self.cs_tags.len())
                .map(|t| (0..ns).map(|s| (0..na).map(|a| self.obs_row(t, s, a).to_vec()).collect()).collect())
                .collect(),
            initial_state_dist: self.initial.clone(),
            cs_tags: self.cs_tags.iter().map(|cs| cs.iter().map(|c| c.members()).collect()).collect(),
        }
    }
}

/// JSON layout: the game file under `game` plus the observation model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PomcgFile {
    pub game: GameFile,
    pub observations_per_agent: Vec<usize>,
    /// `obs_prob[tag][s'][a][o]`
    pub obs_prob: Vec<Vec<Vec<Vec<f64>>>>,
    pub initial_state_dist: Vec<f64>,
    /// Each structure lists its blocks as agent lists.
    pub cs_tags: Vec<Vec<Vec<usize>>>,
}

impl TryFrom<PomcgFile> for Pomcg {
    type Error = Error;

    fn try_from(f: PomcgFile) -> Result<Self> {
        let base = MarkovConvexGame::try_from(f.game)?;
        let n = base.n_agents();
        let cs_tags = f
            .cs_tags
            .iter()
            .map(|cs| cs.iter().map(|block| CoalitionMask::from_members(n, block)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let (ns, na) = (base.n_states(), base.n_joint_actions());
        let mut obs_prob = Vec::with_capacity(f.obs_prob.len());
        for (t, table) in f.obs_prob.into_iter().enumerate() {
            if table.len() != ns || table.iter().any(|rows| rows.len() != na) {
                return Err(Error::Shape(format!("observation kernel {t} must be indexed [state][joint action]")));
            }
            obs_prob.push(table.into_iter().flatten().flatten().collect());
        }
        Pomcg::new(base, f.observations_per_agent, obs_prob, f.initial_state_dist, cs_tags)
    }
}
