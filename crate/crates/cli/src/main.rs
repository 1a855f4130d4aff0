mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lft_core::experiment::LossChoice;
use lft_core::trainer::{StopMetric, DEFAULT_ETA, DEFAULT_LAMBDA, DEFAULT_MAX_EPOCHS, DEFAULT_TOL};

#[derive(Parser, Debug)]
#[command(
    name = "lft",
    version,
    about = "Sparse traffic tensor completion with latent factorization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split, train, and score one model; write checkpoint, curve and manifest.
    Train(TrainCmd),
    /// Repeat training over distinct split seeds and aggregate test metrics.
    Repeat(RepeatCmd),
    /// Train several losses on identical splits and initialization.
    Compare(CompareCmd),
    /// Predict entries from a checkpoint.
    Impute(ImputeCmd),
    /// Validation grid search over learning rate and regularization.
    Grid(GridCmd),
    /// Write a synthetic low-rank tensor in COO text format.
    Synth(SynthCmd),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossArg {
    L2,
    Tdw,
}

impl From<LossArg> for LossChoice {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::L2 => LossChoice::L2,
            LossArg::Tdw => LossChoice::Tdw,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricArg {
    Rmse,
    Mae,
}

impl From<MetricArg> for StopMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Rmse => StopMetric::Rmse,
            MetricArg::Mae => StopMetric::Mae,
        }
    }
}

/// Options shared by every training subcommand.
#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Observed tensor in COO text format.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub rank: usize,
    #[arg(long, default_value_t = DEFAULT_ETA)]
    pub eta: f64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Split and shuffle seed.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = lft_core::model::DEFAULT_INIT_SEED)]
    pub init_seed: u64,
    /// Factors start uniform on (0, init-scale).
    #[arg(long, default_value_t = lft_core::model::DEFAULT_INIT_SCALE)]
    pub init_scale: f64,
    /// Train:validation:test proportions.
    #[arg(long, default_value = "7:1:2")]
    pub split: String,
    #[arg(long, default_value_t = DEFAULT_MAX_EPOCHS)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Visit training entries in file order instead of reshuffling each epoch.
    #[arg(long)]
    pub no_shuffle: bool,
    #[arg(long, value_enum, default_value_t = MetricArg::Rmse)]
    pub stop_metric: MetricArg,
    /// Keep the best-validation model instead of the final one.
    #[arg(long)]
    pub keep_best: bool,
    /// Fraction of training entries to corrupt (0 disables).
    #[arg(long, default_value_t = 0.0)]
    pub outlier_fraction: f64,
    /// Outlier shift in standard deviations of the training values.
    #[arg(long, default_value_t = 10.0)]
    pub outlier_magnitude: f64,
    #[arg(long, default_value_t = 0)]
    pub outlier_seed: u64,
}

#[derive(Args, Debug)]
pub struct TrainCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value_t = LossArg::Tdw)]
    pub loss: LossArg,
    #[arg(long)]
    pub out_model: Option<PathBuf>,
    /// CSV with header `epoch,val_rmse,val_mae`.
    #[arg(long)]
    pub out_curve: Option<PathBuf>,
    #[arg(long)]
    pub out_manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RepeatCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value_t = LossArg::Tdw)]
    pub loss: LossArg,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    /// Reuse `--seed` for every run instead of `seed + run`.
    #[arg(long)]
    pub fixed_split: bool,
    /// Run repetitions one after another.
    #[arg(long)]
    pub sequential: bool,
    /// Per-run and aggregate CSV (stdout when omitted).
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    /// Directory receiving `run_<n>.manifest` files.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Losses to train, one output row each.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "l2,tdw")]
    pub losses: Vec<LossArg>,
    /// CSV with header `loss,test_rmse,test_mae,time_rmse_s,time_mae_s` (stdout when omitted).
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ImputeCmd {
    #[arg(long)]
    pub model: PathBuf,
    /// File of `i j k` lines.
    #[arg(long, conflicts_with = "all_missing")]
    pub queries: Option<PathBuf>,
    /// Predict every cell absent from `--data`.
    #[arg(long, requires = "data")]
    pub all_missing: bool,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// COO output (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GridCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value_t = LossArg::Tdw)]
    pub loss: LossArg,
    /// Learning rates; defaults to 5 log-spaced values in [1e-4, 1e-2].
    #[arg(long, value_delimiter = ',')]
    pub etas: Vec<f64>,
    /// Regularization values; defaults to 1e-3, 1e-2, 1e-1.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Vec<f64>,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthCmd {
    /// Comma-separated `I,J,K`.
    #[arg(long, value_delimiter = ',', num_args = 3, default_value = "30,30,15")]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub rank: usize,
    #[arg(long, default_value_t = 0.3)]
    pub density: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the generating model as a checkpoint.
    #[arg(long)]
    pub out_truth: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(c) => commands::train(&c),
        Command::Repeat(c) => commands::repeat(&c),
        Command::Compare(c) => commands::compare(&c),
        Command::Impute(c) => commands::impute(&c),
        Command::Grid(c) => commands::grid(&c),
        Command::Synth(c) => commands::synth(&c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
