//! Exact and tabular Shapley-value credit assignment for cooperative Markov
//! games.
//!
//! The crate is organised around one object, [`mcg::MarkovConvexGame`], and
//! the solvers that consume it:
//!
//! - [`mcg`]: the game model, coalition subgames, value/policy iteration and
//!   convexity checks.
//! - [`shapley`]: marginal contributions, exact and sampled Markov Shapley
//!   values, Markov core and fairness checks.
//! - [`sbo`]: the Shapley-Bellman operator and its fixed point.
//! - [`shaq`]: tabular Shapley Q-learning (and its VDN special case).
//! - [`pomcg`]: belief-state machinery for the partially observable case.
//! - [`envs`]: fixture games, predator-prey and a linearised feeder.
//! - [`oracle`]: brute-force references the rest is checked against.

pub mod envs;
pub mod error;
pub mod mcg;
pub mod numeric;
pub mod oracle;
pub mod pomcg;
pub mod sbo;
pub mod shaq;
pub mod shapley;

pub use error::{Error, Result};
