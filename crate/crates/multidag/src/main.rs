//! Thin command-line front end; all behavior lives in the library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use multidag::commands;
use multidag::error::Error;
use multidag::runconfig::{FileConfig, FlagOverrides, ResolvedConfig};

#[derive(Parser)]
#[command(
    name = "multidag",
    version,
    about = "Exact joint MAP estimation of multiple related DAGs from time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build per-subject local score caches from time-series CSVs.
    Score(CommonFlags),
    /// Solve for the joint MAP configuration from cached scores.
    Fit(CommonFlags),
    /// Sweep lambda (fixed mode) or eta (joint mode) over a grid.
    Sweep(CommonFlags),
    /// Generate synthetic multi-subject data with known ground truth.
    Simulate(CommonFlags),
    /// Re-render DOT files or plot scripts from existing outputs.
    Export(CommonFlags),
}

#[derive(Args, Clone, Default)]
struct CommonFlags {
    /// Structured config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Manifest CSV listing subject ids and series paths.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Directory holding one `<subject>.scores` cache per subject.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Hyperparameter TOML (lambda, eta, d_max).
    #[arg(long)]
    hyper: Option<PathBuf>,
    /// fixed | joint | cluster.
    #[arg(long)]
    mode: Option<String>,
    /// Subject network JSON (fixed mode).
    #[arg(long)]
    network: Option<PathBuf>,
    /// Number of latent prototypes (cluster mode).
    #[arg(long)]
    clusters: Option<usize>,
    /// Comma-separated grid values for sweeps.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// shd | xor (sweep summary metric).
    #[arg(long)]
    metric: Option<String>,
    /// Wall-clock solve limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Worker threads; 0 means all cores. Never changes results.
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for simulation.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// In-degree cap for scoring and simulation.
    #[arg(long)]
    d_max: Option<usize>,
    /// Existing solution JSON (export).
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Existing sweep CSV (export).
    #[arg(long)]
    sweep: Option<PathBuf>,
    /// Variables per subject (simulate).
    #[arg(long)]
    p: Option<usize>,
    /// Number of subjects (simulate).
    #[arg(long)]
    subjects: Option<usize>,
    /// Time steps per subject (simulate).
    #[arg(long)]
    steps: Option<usize>,
    /// Expected parent-set perturbations per subject (simulate).
    #[arg(long)]
    divergence: Option<f64>,
}

impl CommonFlags {
    fn into_overrides(self) -> (Option<PathBuf>, FlagOverrides) {
        let config = self.config;
        let overrides = FlagOverrides {
            manifest: self.manifest,
            cache_dir: self.cache_dir,
            hyper: self.hyper,
            mode: self.mode,
            network: self.network,
            clusters: self.clusters,
            grid: self.grid,
            metric: self.metric,
            time_limit: self.time_limit,
            threads: self.threads,
            seed: self.seed,
            out: self.out,
            d_max: self.d_max,
            solution: self.solution,
            sweep: self.sweep,
            p: self.p,
            subjects: self.subjects,
            steps: self.steps,
            divergence: self.divergence,
        };
        (config, overrides)
    }
}

fn resolve(command: &str, flags: CommonFlags) -> Result<ResolvedConfig, Error> {
    let (config_path, overrides) = flags.into_overrides();
    let file = match config_path {
        Some(path) => Some(FileConfig::load(&path)?),
        None => None,
    };
    ResolvedConfig::resolve(command, file, overrides)
}

fn run(cli: Cli) -> Result<commands::CommandOutcome, Error> {
    let ok = commands::CommandOutcome { gap_limited: false };
    match cli.command {
        Command::Score(flags) => {
            commands::cmd_score(&resolve("score", flags)?)?;
            Ok(ok)
        }
        Command::Fit(flags) => commands::cmd_fit(&resolve("fit", flags)?),
        Command::Sweep(flags) => {
            commands::cmd_sweep(&resolve("sweep", flags)?)?;
            Ok(ok)
        }
        Command::Simulate(flags) => {
            commands::cmd_simulate(&resolve("simulate", flags)?)?;
            Ok(ok)
        }
        Command::Export(flags) => {
            commands::cmd_export(&resolve("export", flags)?)?;
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) if outcome.gap_limited => ExitCode::from(2),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
