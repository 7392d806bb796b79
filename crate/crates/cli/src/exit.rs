use std::fmt;
use std::process::ExitCode;

use markov_shapley::Error as CoreError;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config files or input files.
    Config(String),
    /// A solver ran out of sweeps.
    NonConvergence(String),
    /// `verify` found a failing cross-check.
    Verification(usize),
    /// Anything else, with the subcommand it came from.
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Verification(_) => 4,
        })
    }

    /// Wraps a library error raised while running `context`.
    pub fn solver(context: &str, err: CoreError) -> Self {
        match err {
            CoreError::NonConvergence { .. } => CliError::NonConvergence(format!("{context}: {err}")),
            CoreError::InvalidGame(_)
            | CoreError::InvalidCoalition { .. }
            | CoreError::InvalidArgument(_)
            | CoreError::Capacity(_)
            | CoreError::Shape(_)
            | CoreError::UnknownBarrier(_) => CliError::Config(format!("{context}: {err}")),
            _ => CliError::Runtime(format!("{context}: {err}")),
        }
    }

    /// Wraps an error raised while loading an input file.
    pub fn input(path: &std::path::Path, err: CoreError) -> Self {
        CliError::Config(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::NonConvergence(m) => write!(f, "solver did not converge: {m}"),
            CliError::Verification(n) => write!(f, "{n} verification check(s) failed"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o: {e}"))
    }
}
