//! `pnn`: seeded experiments over porcupine networks, written as CSV.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pnn_core::PnnError;

#[derive(Parser, Debug)]
#[command(name = "pnn", version, about = "Experiments on two-layer relu networks with weights confined to lines")]
pub struct Cli {
    /// Master seed; every random quantity is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for the parallel sweeps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Monte Carlo sample count, where a command uses one.
    #[arg(long, global = true)]
    pub mc_samples: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Closed-form population risk, optionally checked by Monte Carlo.
    Risk(RiskArgs),
    /// Region classification, good-region probabilities and bad-region losses.
    Landscape {
        #[command(subcommand)]
        action: LandscapeAction,
    },
    /// Schur-complement spectral norms over random line sets.
    SchurSweep(SweepArgs),
    /// Reference matrix, eigenvalues and limit for the high-dimensional regime.
    Asymptotic(AsymptoticArgs),
    /// Projected-SGD training experiments.
    Train {
        #[command(subcommand)]
        kind: TrainKind,
    },
    /// Angular nets and minimax bounds.
    Minimax {
        #[command(subcommand)]
        action: MinimaxAction,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Demo {
    /// The single-input network with targets (6, 4) and (6, −4).
    Scalar,
}

#[derive(Args, Debug)]
pub struct RiskArgs {
    /// Built-in instances instead of a random one.
    #[arg(long, value_enum)]
    pub demo: Option<Demo>,
    /// Random instance with W and W* on the same lines and neuron map.
    #[arg(long, conflicts_with = "mismatched")]
    pub matched: bool,
    /// Random instance with W* on its own lines.
    #[arg(long)]
    pub mismatched: bool,
    /// Evaluate at W = W* (matched only).
    #[arg(long)]
    pub at_target: bool,
    #[arg(long, default_value_t = 4)]
    pub d: usize,
    #[arg(long, default_value_t = 3)]
    pub r: usize,
    #[arg(long, default_value_t = 6)]
    pub k: usize,
    #[arg(long, default_value_t = 2)]
    pub r_star: usize,
    #[arg(long, default_value_t = 4)]
    pub k_star: usize,
    /// Scalar weights for the scalar demo, e.g. `3,3`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub w: Option<Vec<f64>>,
    /// Scalar target for the scalar demo, e.g. `6,-4`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub w_star: Option<Vec<f64>>,
}

#[derive(Subcommand, Debug)]
pub enum LandscapeAction {
    /// Classify every orientation region of a scalar network.
    Classify {
        /// Single-input network (the only case with a closed-form case analysis).
        #[arg(long)]
        scalar: bool,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        w_star: Vec<f64>,
    },
    /// Probability that a random orientation pattern is a good region.
    Probability {
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<usize>,
        #[arg(long)]
        d: usize,
        /// Neurons per line.
        #[arg(long, default_value_t = 2)]
        t: usize,
    },
    /// Bad-region stationary losses against the good-region value on random instances.
    BadRegion {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        r_star: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Concentration slack for the asymptotic bound column.
        #[arg(long, default_value_t = 2.0)]
        mu: f64,
    },
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub r_star: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pub r: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Use only the line of L nearest to each target line.
    #[arg(long)]
    pub nearest: bool,
    /// Add the high-dimensional reference limit as a column.
    #[arg(long)]
    pub asymptotic: bool,
    /// Fill the runtime_ms column (otherwise left empty so reruns are byte-identical).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug)]
pub struct AsymptoticArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub r: usize,
    #[arg(long)]
    pub r_star: usize,
}

#[derive(Args, Debug, Clone)]
pub struct TrainOverrides {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum TrainKind {
    /// Degree-one networks trained on data from the same lines.
    Matched {
        #[arg(long)]
        d: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[command(flatten)]
        train: TrainOverrides,
    },
    /// Random-line networks trained on data from a dense network.
    Mismatched {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k_star: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 5)]
        inits: usize,
        #[command(flatten)]
        train: TrainOverrides,
    },
}

#[derive(Subcommand, Debug)]
pub enum MinimaxAction {
    /// Net-size and minimax-risk bounds.
    Bound {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        k: usize,
        /// Bound on the target weight norms.
        #[arg(long = "M", default_value_t = 1.0)]
        m: f64,
    },
    /// Build a greedy angular net and measure its coverage.
    Net {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        delta: f64,
        /// Consecutive covered probes before the construction stops.
        #[arg(long, default_value_t = 10_000)]
        probes: usize,
        #[arg(long, default_value_t = 100_000)]
        coverage_probes: usize,
    },
    /// Approximate random networks by net directions and compare E|f − f̂| to the bound.
    Approx {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 10)]
        networks: usize,
        #[arg(long = "M", default_value_t = 1.0)]
        m: f64,
    },
}

#[derive(Debug)]
pub enum CliError {
    Core(PnnError),
    Usage(String),
    Io(std::io::Error),
}

impl From<PnnError> for CliError {
    fn from(e: PnnError) -> CliError {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(s) => write!(f, "{s}"),
            CliError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
