//! `iterlstm`: training, evaluation and analysis of iterative LSTM models.

mod commands;
mod config_file;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use iterlstm_core::lm::TokenMode;

use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "iterlstm", version, about = "Iterative LSTM language models and dynamics tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a language model.
    Train(TrainArgs),
    /// Perplexity of a checkpoint on a corpus split.
    Eval(EvalArgs),
    /// Train one model per fixed iteration count and tabulate test perplexity.
    Sweep(SweepArgs),
    /// Report the spectral convergence condition of every layer.
    CheckCondition(CheckArgs),
    /// Rescale every layer of a checkpoint to a convergence margin.
    Rescale(RescaleArgs),
    /// Liapunov exponents of frozen-input maps, one JSON record per draw.
    Lyapunov(LyapunovArgs),
    /// Compare analytic gradients with finite differences.
    Gradcheck(GradcheckArgs),
    /// Write a synthetic character corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// Directory with train/valid/test text files.
    #[arg(long)]
    corpus: PathBuf,
    /// Tokenization; defaults to the configured mode.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<TokenMode>,
}

fn parse_mode(s: &str) -> Result<TokenMode, String> {
    s.parse().map_err(|e: iterlstm_core::Error| e.to_string())
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Output directory for the log, checkpoints and metrics.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Run exactly this many iterations per timestep.
    #[arg(long)]
    iterations: Option<usize>,
    /// Continue from the last checkpoint in the output directory.
    #[arg(long)]
    resume: bool,
    /// Stop after this many epochs in this invocation.
    #[arg(long)]
    stop_after: Option<usize>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, default_value = "test", value_parser = ["train", "valid", "test"])]
    split: String,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated iteration counts, e.g. `1,2,4,6`.
    #[arg(long, value_delimiter = ',', required = true)]
    iterations: Vec<usize>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct RescaleArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    margin: f64,
    /// Manifest path of the rescaled checkpoint.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["checkpoint", "random"])))]
struct LyapunovArgs {
    /// Analyse a layer of this checkpoint.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Analyse freshly drawn random layers.
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 100)]
    draws: usize,
    #[arg(long, default_value_t = 200)]
    tau: usize,
    /// Rescale to this margin first. Random draws default to 0.5.
    #[arg(long, allow_negative_numbers = true)]
    margin: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Units of random layers.
    #[arg(long, default_value_t = 8)]
    units: usize,
    /// Checkpoint layer to analyse.
    #[arg(long, default_value_t = 0)]
    layer: usize,
    /// Also write the records to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 20)]
    models: usize,
    /// Largest layer width (at most 16).
    #[arg(long, default_value_t = 8)]
    units: usize,
    #[arg(long, default_value_t = 3)]
    timesteps: usize,
    /// Largest iteration count.
    #[arg(long, default_value_t = 3)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
    /// Perturb the analytic gradient of this buffer (harness self-test).
    #[arg(long, hide = true)]
    corrupt: Option<String>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Characters in the training split.
    #[arg(long, default_value_t = 900_000)]
    train_chars: usize,
    /// Characters in each of the validation and test splits.
    #[arg(long, default_value_t = 50_000)]
    eval_chars: usize,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::CheckCondition(a) => commands::condition(a),
        Command::Rescale(a) => commands::rescale(a),
        Command::Lyapunov(a) => commands::lyapunov(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
        Command::Synth(a) => commands::synth(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
