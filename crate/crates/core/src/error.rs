use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("coalition mask {mask:#b} references agents outside 0..{n_agents}")]
    InvalidCoalition { mask: u32, n_agents: usize },

    #[error("solver did not converge after {iterations} sweeps (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("contraction condition violated (margin {margin:e}); the operator may diverge")]
    ContractionViolated { margin: f64 },

    #[error("observation {observation} has zero probability under the current belief and action")]
    ImpossibleObservation { observation: usize },

    #[error("belief set is not closed: successor {belief:?} (tag {cs_tag}) is missing")]
    OpenBeliefSet { belief: Vec<f64>, cs_tag: usize },

    #[error("voltage collapse: discriminant {discriminant:e} is negative")]
    VoltageCollapse { discriminant: f64 },

    #[error("unknown barrier kind `{0}`")]
    UnknownBarrier(String),

    #[error("not applicable: {0}")]
    Inapplicable(String),

    #[error("environment fault: {0}")]
    Env(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
