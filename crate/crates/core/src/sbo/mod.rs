//! Shapley-Bellman operator and its fixed point.

mod operator;
mod weights;

pub use operator::{apply_sbo, equal_credit_check, equal_credit_gap, greedy_actions, sbo_norm, solve_sboe, solve_sboe_from, SboOptions, SboSolution, SboStep};
pub use weights::{contraction_condition, ContractionCheck, SboWeights};
