//! Tabular Shapley Q-learning and its additive (VDN) special case.

pub mod presets;
mod state;
mod train;

pub use state::{
    delta_coefficient, extract_policy, shaq_step, shaq_td_error, EpsSchedule, LrSchedule, ShaqConfig, ShaqMode,
    ShaqState, Transition,
};
pub use train::{curve_header, evaluate_greedy, train, write_curve_csv, CurveRecord, EpisodeOutcome};
