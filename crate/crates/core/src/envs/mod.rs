//! Fixture games and learning environments.

pub mod feeder;
pub mod fixtures;
pub mod predator_prey;
mod tabular;
pub mod voltage;

pub use predator_prey::{GridPredatorPrey, PredatorPreyConfig};
pub use tabular::{EnvStep, GameEnv, TabularEnv};
pub use feeder::{DiscreteFeeder, FeederModel, FeederTrace};
pub use voltage::Barrier;
