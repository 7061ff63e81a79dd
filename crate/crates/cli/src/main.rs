use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

mod config;
mod eval;
mod info;
mod plot;
mod svg;
mod train;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<isac_core::Error> for CliError {
    fn from(e: isac_core::Error) -> Self {
        use isac_core::Error as E;
        match e {
            E::Config(_)
            | E::Usage(_)
            | E::Domain(_)
            | E::Checkpoint { .. }
            | E::Dimension { .. }
            | E::Parse { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "isac", version, about = "Train and evaluate learned ISAC codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an autoencoder from a TOML experiment config.
    Train(TrainArgs),
    /// Measure ACSL distributions or BER curves of a checkpoint or baseline.
    Eval(EvalArgs),
    /// Render report CSVs as a standalone SVG chart.
    Plot(PlotArgs),
    /// Print the Polar construction and the Zadoff-Chu root set.
    BaselineInfo(InfoArgs),
}

#[derive(Args)]
pub struct TrainArgs {
    /// Experiment config file.
    pub config: PathBuf,
    /// Run 20 epochs instead of the configured count.
    #[arg(long)]
    pub smoke: bool,
    /// Output directory (default: the config's output.dir).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Suppress per-epoch progress lines.
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Polar,
    Zc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    Acsl,
    Ber,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Trained checkpoint to evaluate.
    #[arg(long, conflicts_with = "baseline", required_unless_present = "baseline")]
    pub ckpt: Option<PathBuf>,
    /// Baseline code to evaluate.
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
    /// Message bits of the Polar baseline (code length 2K).
    #[arg(long, default_value_t = 16)]
    pub k: usize,
    /// Zadoff-Chu length.
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    /// Polar interleaver seed.
    #[arg(long)]
    pub interleaver_seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = EvalMode::Acsl)]
    pub mode: EvalMode,
    /// Enumerate all 2^16 messages (K=16 only).
    #[arg(long)]
    pub exhaustive: bool,
    /// Number of sampled messages for ACSL.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    /// Seed of the shared message and noise streams.
    #[arg(long, default_value_t = isac_core::evaluation::DEFAULT_EVAL_SEED)]
    pub seed: u64,
    /// SNR grid in dB as start:step:stop.
    #[arg(long, default_value = "0:1:9")]
    pub snr: String,
    /// Messages per SNR point.
    #[arg(long, default_value_t = 1_000_000)]
    pub messages: u64,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Identifier used in file names and CSV rows.
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long, env = config::OUTPUT_DIR_ENV, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Box,
    Line,
    Scatter,
}

#[derive(Args)]
pub struct PlotArgs {
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    /// Report CSVs (summary, acsl, ber or history).
    #[arg(long = "input", short, required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub title: Option<String>,
    #[arg(long)]
    pub x_label: Option<String>,
    #[arg(long)]
    pub y_label: Option<String>,
    /// Force a logarithmic y axis (default for BER and loss curves).
    #[arg(long)]
    pub log_y: Option<bool>,
}

#[derive(Args)]
pub struct InfoArgs {
    #[arg(long, default_value_t = 16)]
    pub k: usize,
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    #[arg(long)]
    pub interleaver_seed: Option<u64>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(a) => train::run(&a),
        Command::Eval(a) => eval::run(&a),
        Command::Plot(a) => plot::run(&a),
        Command::BaselineInfo(a) => info::run(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
