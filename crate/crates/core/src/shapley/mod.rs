//! Marginal contributions, Shapley (Q-)values, the Markov core and fairness checks.

mod core;
mod exact;
mod fairness;
mod marginal;
mod sampling;
mod values;

pub use self::core::{check_markov_core, CoalitionSlack, CoreReport};
pub use exact::{exact_msq, exact_msq_table, MsqSlice, MsvTable, SampleMode, EXACT_MAX_AGENTS};
pub use fairness::{check_igm, verify_fairness, FairnessReport};
pub use marginal::{action_marginal_contribution, coalition_weight, marginal_contribution};
pub use sampling::{mc_msq, mc_msv, sample_coalition, sample_rng, McSampling};
pub use values::CoalitionValues;
