//! Brute-force references and the `verify` harness that compares solvers against them.

pub mod brute;
mod verify;

pub use brute::{all_values, belief_expectimax, coalition_value, enumerate_core, expectimax, perm_shapley};
pub use verify::{all_pass, verify, OracleReport, Suite};
