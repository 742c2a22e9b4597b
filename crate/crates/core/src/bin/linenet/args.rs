use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use linenet::exact::{EvalMode, ModelKind};

/// Component-count probabilities of one-dimensional random ad hoc networks.
///
/// Settings can also come from a `--config` file of `key = value` lines using
/// the flag names (for example `seed = 7` or `L = 2.5`); flags override the
/// file. LINENET_SEED and LINENET_WORKERS provide the default seed and
/// worker count.
#[derive(Debug, Parser)]
#[command(name = "linenet", version)]
pub struct Cli {
    /// Flat `key = value` settings file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one closed-form probability Q_m.
    Exact(ExactArgs),
    /// Monte Carlo estimate of the component-count distribution.
    Simulate(SimulateArgs),
    /// Write the figure data: one CSV (and optional SVG) per m = 1..6.
    Figures(FiguresArgs),
    /// Run the built-in invariant, oracle and simulation checks.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Free,
    Anchored,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Free => ModelKind::Free,
            ModelArg::Anchored => ModelKind::Anchored,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Float,
    Rational,
    Auto,
}

impl From<ModeArg> for EvalMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Float => EvalMode::Float,
            ModeArg::Rational => EvalMode::Rational,
            ModeArg::Auto => EvalMode::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Quick,
    Full,
}

/// Network geometry. Give `--rho`, or `--L` and `--r`, or `--rho` with one
/// of `--L` / `--r`.
#[derive(Debug, Clone, Default, Args)]
pub struct NetworkArgs {
    /// Model: `free` (no fixed node) or `anchored` (access point, at 0 unless --x).
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Number of random nodes.
    #[arg(long)]
    pub n: Option<usize>,
    /// Ratio L/r.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Segment length.
    #[arg(long = "L", value_name = "L")]
    pub length: Option<f64>,
    /// Transmission radius.
    #[arg(long, value_name = "R")]
    pub r: Option<f64>,
    /// Access point position in [0, L] (anchored model only).
    #[arg(long, value_name = "POS")]
    pub x: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Root seed [env: LINENET_SEED; default 42].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads [env: LINENET_WORKERS; default: available cores].
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub network: NetworkArgs,
    /// Component count.
    #[arg(long)]
    pub m: Option<usize>,
    /// Evaluation mode [default: auto].
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub network: NetworkArgs,
    /// Monte Carlo trials [default: 100000].
    #[arg(long)]
    pub trials: Option<u64>,
    #[command(flatten)]
    pub run: RunArgs,
    /// Evaluation mode of the exact comparison [default: auto].
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Args)]
pub struct FiguresArgs {
    /// Output directory [default: figures].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Monte Carlo trials per (n, rho) point; 0 writes exact values only [default: 100000].
    #[arg(long)]
    pub trials: Option<u64>,
    #[command(flatten)]
    pub run: RunArgs,
    /// Evaluation mode [default: auto].
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Also render an SVG chart per file.
    #[arg(long)]
    pub svg: bool,
    /// First rho of the grid [default: 0.25].
    #[arg(long)]
    pub rho_start: Option<f64>,
    /// Last rho of the grid [default: 30].
    #[arg(long)]
    pub rho_stop: Option<f64>,
    /// Grid spacing [default: 0.25].
    #[arg(long)]
    pub rho_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// `quick`: identities only; `full`: adds quadrature and simulation [default: quick].
    #[arg(long, value_enum)]
    pub level: Option<LevelArg>,
    /// Monte Carlo trials per point at the full level [default: 100000].
    #[arg(long)]
    pub trials: Option<u64>,
    #[command(flatten)]
    pub run: RunArgs,
}
