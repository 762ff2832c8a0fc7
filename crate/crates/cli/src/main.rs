use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use firesim_core::experiments::ExperimentKind;
use firesim_core::metrics::Metric;

mod commands;
mod error;
mod manifest;
mod output;

use error::{CliError, CliResult};

/// Stochastic forest-fire ensembles and probabilistic forecast verification.
///
/// Exit codes: 0 success, 1 usage, 2 input or format error, 3 internal
/// invariant violation.
#[derive(Debug, Parser)]
#[command(name = "firesim", version)]
struct Cli {
    /// Worker threads for simulation and scoring (default: all cores).
    /// Results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Runs an ensemble from one initial condition and writes one FFCA
    /// trace per realization.
    Simulate(SimulateArgs),
    /// Reduces a trace directory to an FFST burn-frequency map, a macro
    /// series CSV and a steady-state histogram CSV.
    Stats(StatsArgs),
    /// Scores a forecast against a trace directory.
    Evaluate(EvaluateArgs),
    /// Runs one of the evaluation studies end to end.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// JSON simulation config; omitted keys take their defaults.
    config: Option<PathBuf>,
    /// Number of realizations.
    #[arg(long)]
    sims: u32,
    /// Overrides the config's S-Level.
    #[arg(long)]
    s_level: Option<f64>,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Index of the first realization. Ensembles with the same seed and
    /// disjoint index ranges share the initial condition but no
    /// realization, as needed for held-out evaluation sets.
    #[arg(long, default_value_t = 0)]
    first_index: u32,
    #[arg(long)]
    out: PathBuf,
    /// Replace earlier outputs in the output directory.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Directory of FFCA traces sharing one configuration.
    traces: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Histogram bins.
    #[arg(long, default_value_t = 30)]
    bins: usize,
    /// Histogram timestep (default: the steady state).
    #[arg(long)]
    at: Option<usize>,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Stratify {
    Time,
    Variance,
    Dc,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// FFST forecast file, or `persistence` for the frozen-mask baseline.
    forecast: String,
    /// Directory of FFCA evaluation traces.
    traces: PathBuf,
    /// Comma-separated metric names.
    #[arg(long, value_delimiter = ',', value_parser = parse_metric, default_values_t = Metric::ALL)]
    metrics: Vec<Metric>,
    #[arg(long, value_enum, default_value_t = Stratify::Time)]
    stratify: Stratify,
    /// Last observed timestep; scoring starts one step later.
    #[arg(long, default_value_t = 10)]
    observe: usize,
    /// Last scored timestep.
    #[arg(long, default_value_t = 60)]
    end: usize,
    /// Strata for variance (default 20) or Dice (default 10) binning.
    #[arg(long)]
    bins: Option<usize>,
    /// Frame offset of Dice pairs.
    #[arg(long, default_value_t = 5)]
    delta: usize,
    /// Decision threshold of the thresholded metrics (strict `>`).
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value_t = 10)]
    ece_bins: usize,
    /// Bootstrap intervals for time-stratified reports.
    #[arg(long)]
    ci: bool,
    #[arg(long, default_value_t = 1000)]
    resamples: usize,
    #[arg(long, default_value_t = 0.95)]
    ci_level: f64,
    #[arg(long, default_value_t = 0)]
    bootstrap_seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// One of: sweep, time_stratified, variance, calibration, dc, cross_slevel.
    #[arg(value_parser = parse_kind)]
    kind: ExperimentKind,
    /// JSON experiment config; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: firesim_core::Error| e.to_string())
}

fn parse_kind(s: &str) -> Result<ExperimentKind, String> {
    s.parse().map_err(|e: firesim_core::Error| e.to_string())
}

fn run(cli: Cli) -> CliResult {
    let workers = cli.workers;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = workers {
        if k == 0 {
            return Err(CliError::usage("--workers must be at least 1"));
        }
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| CliError::Internal(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Simulate(a) => commands::simulate(a, workers),
        Command::Stats(a) => commands::stats(a, workers),
        Command::Evaluate(a) => commands::evaluate(a, workers),
        Command::Experiment(a) => commands::experiment(a, workers),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(cli))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Err(_) => ExitCode::from(3),
    }
}
