use super::coalition::CoalitionMask;
use super::game::{MarkovConvexGame, TabularMdp};
use crate::error::{Error, Result};

/// A game restricted to the members of one coalition.
///
/// Non-members are pinned to their null action. Coalition actions are
/// indexed row-major over the members in increasing agent order, the first
/// member varying fastest, so the grand coalition reproduces the joint
/// indexing of the parent game.
#[derive(Debug, Clone)]
pub struct CoalitionSubgame<'g> {
    game: &'g MarkovConvexGame,
    coalition: CoalitionMask,
    members: Vec<usize>,
    member_actions: Vec<usize>,
    full_index: Vec<usize>,
}

pub fn build_coalition_subgame(
    game: &MarkovConvexGame,
    coalition: CoalitionMask,
) -> Result<CoalitionSubgame<'_>> {
    if coalition.n_agents() != game.n_agents() {
        return Err(Error::InvalidCoalition { mask: coalition.bits(), n_agents: game.n_agents() });
    }
    let members = coalition.members();
    let member_actions: Vec<usize> = members.iter().map(|&i| game.actions_per_agent()[i]).collect();
    let n_actions: usize = member_actions.iter().product();

    let mut full_index = Vec::with_capacity(n_actions);
    let mut joint = game.null_action().to_vec();
    for c in 0..n_actions {
        let mut rest = c;
        for (&agent, &k) in members.iter().zip(&member_actions) {
            joint[agent] = rest % k;
            rest /= k;
        }
        full_index.push(game.joint_index(&joint));
    }
    Ok(CoalitionSubgame { game, coalition, members, member_actions, full_index })
}

impl<'g> CoalitionSubgame<'g> {
    pub fn coalition(&self) -> CoalitionMask {
        self.coalition
    }

    pub fn game(&self) -> &'g MarkovConvexGame {
        self.game
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn member_actions(&self) -> &[usize] {
        &self.member_actions
    }

    /// Joint action of the parent game for coalition action `c`.
    pub fn full_joint(&self, c: usize) -> usize {
        self.full_index[c]
    }

    /// Per-member actions of coalition action `c`.
    pub fn decode(&self, c: usize) -> Vec<usize> {
        let mut rest = c;
        self.member_actions
            .iter()
            .map(|&k| {
                let a = rest % k;
                rest /= k;
                a
            })
            .collect()
    }

    /// Action of `agent` inside coalition action `c`; `None` for non-members.
    pub fn member_action(&self, c: usize, agent: usize) -> Option<usize> {
        let pos = self.members.iter().position(|&m| m == agent)?;
        let stride: usize = self.member_actions[..pos].iter().product();
        Some((c / stride) % self.member_actions[pos])
    }
}

impl TabularMdp for CoalitionSubgame<'_> {
    fn n_states(&self) -> usize {
        self.game.n_states()
    }

    fn n_actions(&self) -> usize {
        self.full_index.len()
    }

    fn gamma(&self) -> f64 {
        self.game.gamma()
    }

    fn reward(&self, s: usize, a: usize) -> f64 {
        self.game.reward(s, self.full_index[a])
    }

    fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        self.game.transition_row(s, self.full_index[a])
    }
}
