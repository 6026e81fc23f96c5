use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::channel_file::Model;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  I/O or other runtime failure
  2  usage error, or a channel model the command does not accept
  3  channel file parse error
  4  channel file validation failure (including non-degraded channels)
  5  strategy, codebook or oracle size cap exceeded";

#[derive(Debug, Parser)]
#[command(
    name = "statecap",
    version,
    about = "Capacities, rate regions and coding simulations for channels with causal state at the encoder",
    after_help = EXIT_CODES
)]
pub struct Cli {
    /// Worker threads for solvers and simulations; results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a channel file and print PASS/FAIL for every invariant.
    Validate(ValidateArgs),
    /// Capacity of a single-user or relay channel.
    Capacity(CapacityArgs),
    /// Boundary vertices of a broadcast or multiple-access rate region (CSV).
    Region(RegionArgs),
    /// Monte Carlo error rates of the random coding scheme for the channel's model (CSV).
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    /// Channel description file (TOML).
    #[arg(long, value_name = "FILE")]
    pub channel: PathBuf,
    /// Fail unless the file declares this model.
    #[arg(long)]
    pub model: Option<Model>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Write the canonical form of a valid file here (`-` for stdout).
    #[arg(long, value_name = "PATH")]
    pub dump_canonical: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CapacityArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Convergence tolerance [default: 1e-9 single, 1e-12 relay].
    #[arg(long)]
    pub tol: Option<f64>,
    /// Random restarts of the relay solver.
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also run the lattice oracle and report the gap.
    #[arg(long)]
    pub oracle: bool,
    /// Write a CSV summary here as well.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RegionArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Weights on the broadcast boundary.
    #[arg(long, default_value_t = 33)]
    pub lambda_points: usize,
    /// Random restarts per broadcast weight.
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    /// Random input laws per multiple-access family.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    /// Broadcast ascent stopping threshold.
    #[arg(long, default_value_t = 1e-13)]
    pub tol: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output path; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecoderKind {
    /// Maximum likelihood.
    Ml,
    /// Strong joint typicality.
    Typicality,
}

impl DecoderKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DecoderKind::Ml => "ml",
            DecoderKind::Typicality => "typicality",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Message rates in bits (single and relay), comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub rate: Vec<f64>,
    /// Rates R1 (strong receiver or sender 1), paired with --rate2.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub rate1: Vec<f64>,
    /// Rates R2 (weak receiver or sender 2), paired with --rate1.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub rate2: Vec<f64>,
    /// Relay bin rates R0, one per --rate or a single shared value [default: 0].
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub rate0: Vec<f64>,
    /// Blocklengths, comma separated; each rate point runs at every length.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub blocklength: Vec<usize>,
    /// Relay blocks B.
    #[arg(long, default_value_t = 3)]
    pub blocks: usize,
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = DecoderKind::Ml)]
    pub decoder: DecoderKind,
    /// Typicality slack.
    #[arg(long, default_value_t = statecap::codingsim::DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Solver restarts used to pick the input laws.
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    /// Broadcast weights used to pick the input laws.
    #[arg(long, default_value_t = 33)]
    pub lambda_points: usize,
    /// Multiple-access samples used to pick the input laws.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    /// CSV output path; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}
