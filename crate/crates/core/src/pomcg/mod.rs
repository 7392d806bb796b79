//! Partially observable games solved as belief MDPs.

mod belief;
pub mod fixtures;
mod model;
mod reachable;
mod shapley;
mod solve;

pub use belief::{belief_reward, belief_update, observation_likelihood, BeliefKey, BeliefState, BELIEF_RESOLUTION};
pub use model::{Pomcg, PomcgFile};
pub use reachable::{reachable_beliefs, BeliefSet, DEFAULT_BELIEF_CAP};
pub use shapley::{belief_core, belief_msv, solve_all_coalitions, BeliefCoalitionValues, BeliefCoreReport};
pub use solve::{
    belief_q_backup, pospi, posvi, posvi_finite, sampled_belief_q_update, BeliefMdp, Branch, PospiResult, PosviResult,
};
