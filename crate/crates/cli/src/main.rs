//! `knoop`: simulate data, select variables, run the simulation benchmark and
//! inspect knockoff diagnostics.
//!
//! Tables go to standard output; machine-readable results only to files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use knoop_core::{ShrinkagePolicy, ZScale};

mod benchmark;
mod diagnose;
mod output;
mod select;
mod simulate;

#[derive(Parser, Debug)]
#[command(name = "knoop", version, about = "Variable selection with over-parameterized knockoffs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate an AR(1) linear-Gaussian dataset.
    Simulate(SimulateArgs),
    /// Rank variables of a dataset and select a subset.
    Select(SelectArgs),
    /// Run the Monte Carlo AUC benchmark.
    Benchmark(BenchmarkArgs),
    /// Check second-moment exchangeability of a knockoff ensemble.
    Diagnose(DiagnoseArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long)]
    p_real: usize,
    #[arg(long, default_value_t = 0.25)]
    rho: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; receives data.csv and data.truth.json.
    #[arg(long)]
    out: PathBuf,
}

/// Knockoff and regression settings shared by `select` and `diagnose`.
#[derive(Args, Debug)]
struct ModelArgs {
    /// Shrinkage of the knockoff covariance: auto, ledoit-wolf or a weight in [0, 1].
    #[arg(long, default_value = "ledoit-wolf")]
    shrinkage: ShrinkagePolicy,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("method").required(true).args(["top_k", "bh_alpha", "cv"])))]
struct SelectArgs {
    /// Input CSV with a header row.
    #[arg(long = "in")]
    input: PathBuf,
    /// Name of the response column.
    #[arg(long, default_value = "y")]
    target: String,
    #[arg(long, default_value_t = 3)]
    ell_max: usize,
    /// Keep the k variables with the smallest p-values.
    #[arg(long)]
    top_k: Option<usize>,
    /// Benjamini–Hochberg step-up at this level.
    #[arg(long)]
    bh_alpha: Option<f64>,
    /// Choose the number of variables by cross-validation.
    #[arg(long)]
    cv: bool,
    #[arg(long, default_value_t = 5, requires = "cv")]
    folds: usize,
    /// Candidate sizes for --cv (comma separated); defaults to 1..=min(p, 30).
    #[arg(long, value_delimiter = ',', requires = "cv")]
    cv_sizes: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// alg3 or definition.
    #[arg(long, default_value = "alg3")]
    z_scale: ZScale,
    /// Ridge penalty of the joint fit; 0 gives the minimum-norm interpolator.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[command(flatten)]
    model: ModelArgs,
    /// Output directory; receives report.json and selection.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["preset", "settings"])))]
struct BenchmarkArgs {
    /// Built-in settings; only "paper-settings" is defined.
    #[arg(long)]
    preset: Option<String>,
    /// JSON file holding a list of settings.
    #[arg(long)]
    settings: Option<PathBuf>,
    /// Restrict to these settings, by label or 1-based position (comma separated).
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<String>>,
    /// Override the repetition count of every setting.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "KNOOP_PARALLELISM", default_value_t = 0)]
    parallelism: usize,
    /// Include wall-clock seconds in the output files.
    #[arg(long)]
    timings: bool,
    /// Output directory; receives benchmark.json and benchmark.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "n"])))]
struct DiagnoseArgs {
    /// Input CSV; the target column is dropped before building knockoffs.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, default_value = "y", requires = "input")]
    target: String,
    /// Rows of a simulated AR(1) design (instead of --in).
    #[arg(long, requires = "p")]
    n: Option<usize>,
    #[arg(long, requires = "n")]
    p: Option<usize>,
    #[arg(long, default_value_t = 0.25, requires = "n")]
    rho: f64,
    /// Seed of the simulated design.
    #[arg(long, default_value_t = 0, requires = "n")]
    data_seed: u64,
    #[arg(long, default_value_t = 2)]
    ell_max: usize,
    /// Seed of the knockoff ensemble.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    model: ModelArgs,
    /// Also write the full ensemble to this CSV file.
    #[arg(long)]
    export_ensemble: Option<PathBuf>,
    /// Output directory; receives diagnostics.json.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Select(a) => select::run(a),
        Command::Benchmark(a) => benchmark::run(a),
        Command::Diagnose(a) => diagnose::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
