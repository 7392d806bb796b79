use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use markov_shapley::envs::Barrier;
use markov_shapley::oracle::Suite;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::exit::{CliError, CliResult};

fn default_solve_tol() -> f64 {
    1e-10
}

fn default_sbo_tol() -> f64 {
    1e-8
}

fn default_max_iters() -> usize {
    100_000
}

fn default_posvi_tol() -> f64 {
    1e-8
}

fn default_horizon() -> usize {
    12
}

fn default_belief_cap() -> usize {
    markov_shapley::pomcg::DEFAULT_BELIEF_CAP
}

fn default_buses() -> usize {
    3
}

fn default_episode_len() -> usize {
    markov_shapley::envs::feeder::DEFAULT_EPISODE_LEN
}

fn default_slope() -> f64 {
    markov_shapley::envs::feeder::DEFAULT_DROOP_SLOPE
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveArgs {
    /// Game file (JSON).
    #[arg(long)]
    pub game: PathBuf,
    /// Accuracy target of every coalition value iteration.
    #[arg(long, default_value_t = default_solve_tol())]
    #[serde(default = "default_solve_tol")]
    pub tol: f64,
    /// Agent pair declared symmetric, as `i,j`; repeatable.
    #[arg(long = "symmetric", value_name = "I,J")]
    #[serde(default)]
    pub symmetric: Vec<String>,
    /// Output JSON path; stdout when absent.
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SboArgs {
    /// Game file (JSON).
    #[arg(long)]
    pub game: PathBuf,
    /// Replace the game's discount factor.
    #[arg(long)]
    #[serde(default)]
    pub gamma_override: Option<f64>,
    /// Fixed-point accuracy target.
    #[arg(long, default_value_t = default_sbo_tol())]
    #[serde(default = "default_sbo_tol")]
    pub tol: f64,
    /// Sweep budget.
    #[arg(long, default_value_t = default_max_iters())]
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Output JSON path; stdout when absent.
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Shaq,
    Vdn,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainArgs {
    /// Fixture name (g1, g4, ...), `predator-prey`, `feeder`, or a game file (JSON).
    #[arg(long)]
    pub env: String,
    /// Learner.
    #[arg(long, value_enum, default_value_t = Algo::Shaq)]
    #[serde(default = "default_algo")]
    pub algo: Algo,
    /// Environment steps; the environment's preset when absent.
    #[arg(long)]
    #[serde(default)]
    pub steps: Option<u64>,
    /// Learner seed.
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
    /// Initial exploration rate.
    #[arg(long)]
    #[serde(default)]
    pub eps_start: Option<f64>,
    /// Final exploration rate.
    #[arg(long)]
    #[serde(default)]
    pub eps_end: Option<f64>,
    /// Steps over which exploration anneals linearly.
    #[arg(long)]
    #[serde(default)]
    pub anneal_steps: Option<u64>,
    /// Constant learning rate of the per-agent tables.
    #[arg(long)]
    #[serde(default)]
    pub lr_q: Option<f64>,
    /// Learning rate of the sub-optimal action weights.
    #[arg(long)]
    #[serde(default)]
    pub lr_alpha: Option<f64>,
    /// Upper clamp of the sub-optimal action weights.
    #[arg(long)]
    #[serde(default)]
    pub alpha_max: Option<f64>,
    /// Episode truncation for game environments.
    #[arg(long)]
    #[serde(default)]
    pub episode_limit: Option<usize>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_algo() -> Algo {
    Algo::Shaq
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosviArgs {
    /// Partially observable game file (JSON).
    #[arg(long)]
    pub pomdp: PathBuf,
    /// Depth of the reachable belief enumeration.
    #[arg(long, default_value_t = default_horizon())]
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Value iteration accuracy target.
    #[arg(long, default_value_t = default_posvi_tol())]
    #[serde(default = "default_posvi_tol")]
    pub tol: f64,
    /// Largest belief set per coalition.
    #[arg(long, default_value_t = default_belief_cap())]
    #[serde(default = "default_belief_cap")]
    pub belief_cap: usize,
    /// Output JSON path; stdout when absent.
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Droop,
    None,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeederArgs {
    /// Buses on the chain, slack bus included.
    #[arg(long, default_value_t = default_buses())]
    #[serde(default = "default_buses")]
    pub buses: usize,
    /// Voltage barrier used in the reward: l1, l2 or bowl.
    #[arg(long, default_value_t = Barrier::L1)]
    #[serde(default = "default_barrier")]
    pub barrier: Barrier,
    /// Controller evaluated on the trace.
    #[arg(long, value_enum, default_value_t = Baseline::Droop)]
    #[serde(default = "default_baseline")]
    pub baseline: Baseline,
    /// Load/PV trace (CSV); the built-in benign half-day when absent.
    #[arg(long)]
    #[serde(default)]
    pub trace: Option<PathBuf>,
    /// Steps per episode.
    #[arg(long, default_value_t = default_episode_len())]
    #[serde(default = "default_episode_len")]
    pub episode_len: usize,
    /// Droop slope.
    #[arg(long, default_value_t = default_slope())]
    #[serde(default = "default_slope")]
    pub slope: f64,
    /// Per-step CSV path; stdout when absent.
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Summary JSON path; stdout when absent and the CSV goes to a file.
    #[arg(long)]
    #[serde(default)]
    pub summary: Option<PathBuf>,
}

fn default_barrier() -> Barrier {
    Barrier::L1
}

fn default_baseline() -> Baseline {
    Baseline::Droop
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    /// Which cross-checks to run: all, shapley, sbo, pomcg or envs.
    #[arg(long, default_value_t = Suite::All)]
    #[serde(default = "default_suite")]
    pub suite: Suite,
    /// Also write the reports as JSON.
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_suite() -> Suite {
    Suite::All
}

/// A TOML experiment: shared settings plus one table per subcommand to run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Overrides the seed of the `train` table.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Directory for artifacts whose table gives no `out`.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Overrides the tolerance of the solve, sbo and posvi tables.
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub solve: Option<SolveArgs>,
    #[serde(default)]
    pub sbo: Option<SboArgs>,
    #[serde(default)]
    pub train: Option<TrainArgs>,
    #[serde(default)]
    pub posvi: Option<PosviArgs>,
    #[serde(default)]
    pub feeder: Option<FeederArgs>,
    #[serde(default)]
    pub verify: Option<VerifyArgs>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.apply_overrides();
        config.validate()?;
        Ok(config)
    }

    fn apply_overrides(&mut self) {
        if let (Some(seed), Some(train)) = (self.seed, self.train.as_mut()) {
            train.seed = seed;
        }
        if let Some(tol) = self.tol {
            if let Some(t) = self.solve.as_mut() {
                t.tol = tol;
            }
            if let Some(t) = self.sbo.as_mut() {
                t.tol = tol;
            }
            if let Some(t) = self.posvi.as_mut() {
                t.tol = tol;
            }
        }
        if let Some(dir) = &self.out_dir {
            let place = |out: &mut Option<PathBuf>, name: &str| {
                if out.is_none() {
                    *out = Some(dir.join(name));
                }
            };
            if let Some(t) = self.solve.as_mut() {
                place(&mut t.out, "solve.json");
            }
            if let Some(t) = self.sbo.as_mut() {
                place(&mut t.out, "sbo.json");
            }
            if let Some(t) = self.train.as_mut() {
                place(&mut t.out, "train.csv");
            }
            if let Some(t) = self.posvi.as_mut() {
                place(&mut t.out, "posvi.json");
            }
            if let Some(t) = self.feeder.as_mut() {
                place(&mut t.out, "feeder.csv");
                place(&mut t.summary, "feeder_summary.json");
            }
            if let Some(t) = self.verify.as_mut() {
                place(&mut t.out, "verify.json");
            }
        }
    }

    fn validate(&self) -> CliResult<()> {
        let tables = [
            self.solve.is_some(),
            self.sbo.is_some(),
            self.train.is_some(),
            self.posvi.is_some(),
            self.feeder.is_some(),
            self.verify.is_some(),
        ];
        if !tables.iter().any(|&t| t) {
            return Err(CliError::Config("config names no subcommand table".into()));
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0) {
                return Err(CliError::Config(format!("tol must be positive, got {tol}")));
            }
        }
        Ok(())
    }
}

/// SHA-256 over the command name and its effective arguments, output paths excluded.
pub fn config_hash<T: Serialize>(command: &str, args: &T) -> String {
    let mut args = serde_json::to_value(args).expect("arguments serialize");
    if let Some(map) = args.as_object_mut() {
        map.remove("out");
        map.remove("summary");
    }
    let payload = serde_json::json!({ "command": command, "args": args });
    let bytes = serde_json::to_vec(&payload).expect("arguments serialize");
    hex::encode(Sha256::digest(bytes))
}

pub fn parse_pair(text: &str) -> CliResult<(usize, usize)> {
    let bad = || CliError::Config(format!("symmetric pair `{text}` must look like `i,j`"));
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}
