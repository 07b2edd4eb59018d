//! `apc`: command-line toolkit for adaptive placeholder completion
//! experiments, covering alignment, dataset construction, reward scoring,
//! evaluation, threshold simulation and the cost-theory checker.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 invariant or
//! assumption violation.

mod commands;
mod output;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use apc_core::align::TokenMode;
use apc_core::costmodel::CostModelError;
use apc_core::data::DataError;
use apc_core::lm::LmError;
use apc_core::metrics::MetricsError;
use apc_core::reward::RewardError;
use apc_core::sim::{SimError, ThresholdKind};

/// Default RNG seed for dataset sampling.
pub const DEFAULT_SEED: u64 = 17;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Invariant(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Invariant(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<LmError> for CliError {
    fn from(e: LmError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<CostModelError> for CliError {
    fn from(e: CostModelError) -> Self {
        CliError::Invariant(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<RewardError> for CliError {
    fn from(e: RewardError) -> Self {
        match e {
            RewardError::CursorInTruth => CliError::Data(e.to_string()),
            RewardError::NegativeCost(_) | RewardError::InvalidConfig(_) => {
                CliError::Invariant(e.to_string())
            }
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::EmptyBenchmark
            | SimError::EmptyThresholds
            | SimError::MissingAnnotations { .. }
            | SimError::Metrics(_) => CliError::Data(e.to_string()),
            SimError::InvalidThreshold { .. } | SimError::LengthMismatch { .. } => {
                CliError::Invariant(e.to_string())
            }
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Char,
    Word,
}

impl From<ModeArg> for TokenMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Char => TokenMode::Char,
            ModeArg::Word => TokenMode::Word,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Entropy,
    Confidence,
}

impl From<KindArg> for ThresholdKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Entropy => ThresholdKind::Entropy,
            KindArg::Confidence => ThresholdKind::Confidence,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "apc",
    version,
    about = "Adaptive placeholder completion toolkit",
    after_help = "All numeric output uses six fractional digits; files are written \
                  atomically (temp file, then rename)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Diff prediction/truth pairs and build placeholder instances.
    Align {
        /// JSONL input with one {"pred": ..., "truth": ...} object per line.
        #[arg(long)]
        input: PathBuf,
        /// Output JSONL path (stdout when omitted).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Alignment granularity.
        #[arg(long, value_enum, default_value_t = ModeArg::Word)]
        mode: ModeArg,
    },
    /// Classify edit traces and emit hc.jsonl / pc.jsonl at a fixed ratio.
    BuildDataset {
        /// JSONL edit-trace records.
        #[arg(long)]
        input: PathBuf,
        /// Directory receiving hc.jsonl and pc.jsonl.
        #[arg(long)]
        out_dir: PathBuf,
        /// Sampling seed.
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Target hc:pc ratio, e.g. 1:2.
        #[arg(long, default_value = "1:2")]
        ratio: String,
    },
    /// Score prediction/truth pairs with the cost-based reward.
    Reward {
        /// JSONL input with one {"pred": ..., "truth": ...} object per line.
        #[arg(long)]
        input: PathBuf,
        /// Output JSONL path (stdout when omitted).
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        alpha_lazy: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha_error: f64,
        /// Saturation slope.
        #[arg(long, default_value_t = 0.1)]
        slope: f64,
        /// Reward floor.
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        floor: f64,
    },
    /// Evaluate a benchmark and report aggregate metrics.
    Eval {
        /// JSONL benchmark records.
        #[arg(long)]
        input: PathBuf,
        /// Report path (stdout when omitted).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Optional per-record CSV.
        #[arg(long)]
        per_record: Option<PathBuf>,
    },
    /// Sweep fixed placeholder-insertion thresholds over a benchmark.
    Simulate {
        /// Threshold kind.
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Comma-separated threshold values, e.g. 0.5,1.0,2.0.
        #[arg(long)]
        thresholds: String,
        /// Trained n-gram model file.
        #[arg(long)]
        model: PathBuf,
        /// JSONL benchmark records.
        #[arg(long)]
        bench: PathBuf,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cumulative entropy of placeholder vs. hard-completion regions.
    EntropyProfile {
        /// Trained n-gram model file.
        #[arg(long)]
        model: PathBuf,
        /// JSONL benchmark records with annotations.
        #[arg(long)]
        bench: PathBuf,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force the entropy-threshold sign law on uniform distributions.
    VerifyTheory {
        /// Cost of correcting a wrong concrete token.
        #[arg(long)]
        c_hc: f64,
        /// Cost of filling a placeholder.
        #[arg(long)]
        c_pc: f64,
        /// Largest candidate-set size to check.
        #[arg(long, default_value_t = 100)]
        k_max: usize,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train an add-k smoothed n-gram model on a text corpus.
    TrainLm {
        /// Corpus text file.
        #[arg(long)]
        corpus: PathBuf,
        /// N-gram order (>= 1).
        #[arg(long, default_value_t = 3)]
        order: usize,
        /// Add-k smoothing constant (> 0).
        #[arg(long, default_value_t = 0.01)]
        smoothing_k: f64,
        /// Tokenization mode.
        #[arg(long, value_enum, default_value_t = ModeArg::Word)]
        mode: ModeArg,
        /// Model output path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Align {
            input,
            output,
            mode,
        } => commands::align(&input, output.as_deref(), mode.into()),
        Command::BuildDataset {
            input,
            out_dir,
            seed,
            ratio,
        } => commands::build_dataset(&input, &out_dir, seed, &ratio),
        Command::Reward {
            input,
            output,
            alpha_lazy,
            alpha_error,
            slope,
            floor,
        } => commands::reward(
            &input,
            output.as_deref(),
            alpha_lazy,
            alpha_error,
            slope,
            floor,
        ),
        Command::Eval {
            input,
            output,
            per_record,
        } => commands::eval(&input, output.as_deref(), per_record.as_deref()),
        Command::Simulate {
            kind,
            thresholds,
            model,
            bench,
            out,
        } => commands::simulate(kind.into(), &thresholds, &model, &bench, out.as_deref()),
        Command::EntropyProfile { model, bench, out } => {
            commands::entropy_profile(&model, &bench, out.as_deref())
        }
        Command::VerifyTheory {
            c_hc,
            c_pc,
            k_max,
            out,
        } => commands::verify_theory(c_hc, c_pc, k_max, out.as_deref()),
        Command::TrainLm {
            corpus,
            order,
            smoothing_k,
            mode,
            out,
        } => commands::train_lm(&corpus, order, smoothing_k, mode.into(), &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
