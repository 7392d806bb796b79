//! Markov convex games and exact dynamic-programming solvers for joint and
//! coalition values.

mod coalition;
mod convexity;
mod game;
mod solve;
mod subgame;

pub use coalition::{CoalitionMask, MAX_AGENTS};
pub use convexity::{check_convexity, check_convexity_with, ConvexityMode, ConvexityReport, ConvexityViolation};
pub use game::{GameFile, MarkovConvexGame, TabularMdp};
pub use solve::{
    all_coalition_values, bellman_backup, bellman_residual, greedy_joint_policy, joint_value_iteration,
    optimal_coalition_value, policy_evaluation, policy_iteration, q_value_iteration, CoalitionValueTable,
    PolicyIterationResult, SolveOptions, DEFAULT_MAX_ITERS, DEFAULT_TOL,
};
pub use subgame::{build_coalition_subgame, CoalitionSubgame};
