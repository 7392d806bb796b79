use std::collections::BTreeMap;

use super::belief::{belief_update, observation_likelihood, BeliefKey, BeliefState};
use super::model::Pomcg;
use crate::error::{Error, Result};
use crate::mcg::{build_coalition_subgame, CoalitionMask, TabularMdp};

pub const DEFAULT_BELIEF_CAP: usize = 100_000;

/// Beliefs of one coalition, deduplicated by [`BeliefKey`].
#[derive(Debug, Clone)]
pub struct BeliefSet {
    pub coalition: CoalitionMask,
    pub cs_tag: usize,
    beliefs: Vec<BeliefState>,
    depth: Vec<usize>,
    index: BTreeMap<BeliefKey, usize>,
}

impl BeliefSet {
    pub fn new(coalition: CoalitionMask, cs_tag: usize) -> Self {
        Self { coalition, cs_tag, beliefs: Vec::new(), depth: Vec::new(), index: BTreeMap::new() }
    }

    /// Adds `b` unless an equal belief is present; returns its index.
    pub fn insert(&mut self, b: BeliefState, depth: usize) -> Result<usize> {
        if b.cs_tag != self.cs_tag {
            return Err(Error::InvalidArgument(format!("belief tag {} in a set for tag {}", b.cs_tag, self.cs_tag)));
        }
        let key = b.key();
        if let Some(&i) = self.index.get(&key) {
            return Ok(i);
        }
        self.index.insert(key, self.beliefs.len());
        self.beliefs.push(b);
        self.depth.push(depth);
        Ok(self.beliefs.len() - 1)
    }

    pub fn find(&self, b: &BeliefState) -> Option<usize> {
        self.index.get(&b.key()).copied()
    }

    /// Index of the belief with these probabilities, ignoring the tag.
    pub fn find_probs(&self, probs: &[f64]) -> Option<usize> {
        self.find(&BeliefState { probs: probs.to_vec(), cs_tag: self.cs_tag })
    }

    pub fn len(&self) -> usize {
        self.beliefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beliefs.is_empty()
    }

    pub fn beliefs(&self) -> &[BeliefState] {
        &self.beliefs
    }

    pub fn belief(&self, i: usize) -> &BeliefState {
        &self.beliefs[i]
    }

    /// Fewest steps from the initial belief.
    pub fn depth(&self, i: usize) -> usize {
        self.depth[i]
    }

    /// Indices in lexicographic order of their keys.
    pub fn canonical_order(&self) -> Vec<usize> {
        self.index.values().copied().collect()
    }
}

/// Every belief reachable from the initial belief in at most `horizon` steps
/// of coalition `c` (non-members idle) under its coalition structure.
pub fn reachable_beliefs(pomcg: &Pomcg, c: CoalitionMask, horizon: usize, cap: usize) -> Result<BeliefSet> {
    let sub = build_coalition_subgame(pomcg.base(), c)?;
    let tag = pomcg.tag_for(c);
    let mut set = BeliefSet::new(c, tag);
    set.insert(BeliefState::new(pomcg.initial().to_vec(), tag)?, 0)?;
    let mut frontier = vec![0usize];
    for depth in 1..=horizon {
        let mut next = Vec::new();
        for &i in &frontier {
            let b = set.belief(i).clone();
            for ca in 0..sub.n_actions() {
                let joint = sub.full_joint(ca);
                for (o, p) in observation_likelihood(pomcg, &b, joint)?.into_iter().enumerate() {
                    if p <= 0.0 {
                        continue;
                    }
                    let succ = belief_update(pomcg, &b, joint, o)?;
                    let before = set.len();
                    let j = set.insert(succ, depth)?;
                    if set.len() > before {
                        if set.len() > cap {
                            return Err(Error::Capacity(format!("more than {cap} reachable beliefs")));
                        }
                        next.push(j);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(set)
}
