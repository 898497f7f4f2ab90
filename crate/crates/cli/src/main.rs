//! `eafo`: command-line front end for entropy estimates, WAFBC curves,
//! correction-field checks, CRReLU bounds and the micro trainer.
//!
//! Results go to stdout as JSON; diagnostics go to stderr. Exit codes: 0 on
//! success, 2 for usage or parse errors, 3 for domain or numerical errors.

mod commands;
mod config;
mod error;
mod grammar;
mod manifest;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eafo_core::trainer::{Init, LrSchedule, OptimizerKind};

#[derive(Parser)]
#[command(name = "eafo", version, about = "Entropy analysis of activation functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Differential entropy of a density pushed through an activation branch.
    Entropy(EntropyArgs),
    /// Tabulate the worst activation for a base density, optionally against a reference.
    Wafbc(WafbcArgs),
    /// Correction field, first-order entropy slope and optimised activation table.
    Eafo(EafoArgs),
    /// Check the CRReLU approximate-inverse bound and the bounded-shape extrema.
    CrreluVerify(CrreluVerifyArgs),
    /// Train one MLP and persist its run record.
    Train(TrainArgs),
    /// Train every (activation, seed) cell and tabulate validation accuracy.
    Compare(CompareArgs),
}

#[derive(Args, Clone)]
pub struct CommonArgs {
    /// `key = value` config file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: a fresh directory under $EAFO_OUT or ./runs).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sampling and compare cells.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Args)]
pub struct EntropyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Base density, e.g. `gaussian:0,1`.
    #[arg(long)]
    pub density: Option<String>,
    /// Activation, e.g. `tanh` or `wafbc:gaussian:0,1,c1=1,c2=0`.
    #[arg(long)]
    pub activation: Option<String>,
    /// Monotone branch `lo:hi` of the activation.
    #[arg(long, allow_hyphen_values = true)]
    pub branch: Option<String>,
    /// quadrature, mc or spacing.
    #[arg(long)]
    pub method: Option<String>,
    /// Sample count for mc and spacing.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Spacing window m.
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Args)]
pub struct WafbcArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub density: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub c1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c2: Option<f64>,
    /// `lo:hi:count`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Activation to compare against.
    #[arg(long)]
    pub reference: Option<String>,
}

#[derive(Args)]
pub struct EafoArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub density: Option<String>,
    #[arg(long)]
    pub activation: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub branch: Option<String>,
    /// Perturbation scale s.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Rows in the eta and optimised-activation tables.
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Args)]
pub struct CrreluVerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated epsilon values.
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<String>,
    /// `lo:hi:count`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
}

#[derive(Args)]
pub struct DataArgs {
    /// `blobs:n,separation`, `two-moons:n,noise`, `csv:path[,header]` or `idx:images,labels`.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Seed for the synthetic generators.
    #[arg(long)]
    pub data_seed: Option<u64>,
    #[arg(long)]
    pub val_fraction: Option<f64>,
    #[arg(long)]
    pub split_seed: Option<u64>,
}

#[derive(Args)]
pub struct ModelArgs {
    /// Comma-separated layer widths, input first.
    #[arg(long)]
    pub widths: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub init: Option<Init>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub optimizer: Option<OptimizerKind>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub schedule: Option<LrSchedule>,
    #[arg(long)]
    pub probe_every: Option<usize>,
}

#[derive(Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Activation kind name.
    #[arg(long)]
    pub activation: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated activation kinds.
    #[arg(long)]
    pub kinds: Option<String>,
    /// Seed count N (seeds 1..=N) or a comma list.
    #[arg(long)]
    pub seeds: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Entropy(a) => commands::entropy(a),
        Command::Wafbc(a) => commands::wafbc(a),
        Command::Eafo(a) => commands::eafo(a),
        Command::CrreluVerify(a) => commands::crrelu_verify(a),
        Command::Train(a) => commands::train_cmd(a),
        Command::Compare(a) => commands::compare(a),
    };
    match result.and_then(|v| Ok(eafo_core::json::to_json_string(&v)?)) {
        Ok(text) => {
            // a closed pipe downstream is not a failure of the run
            let _ = writeln!(std::io::stdout(), "{}", text.trim_end());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("eafo: {e}");
            e.exit_code()
        }
    }
}
