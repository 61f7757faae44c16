use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use aerosynth_cli::{commands, sweep, CliError, RunConfig};

/// Artificial aerial vehicle datasets: generation, real-data ingest,
/// tiling, composition, evaluation and experiment grids.
#[derive(Parser)]
#[command(name = "aerosynth", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON config file; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Print the resolved plan without writing anything.
    #[arg(long, global = true)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Validate blueprint masks and report class histograms.
    Prepare {
        #[command(flatten)]
        common: Common,
    },
    /// Render an artificial dataset.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Overrides `image_count`.
        #[arg(long)]
        images: Option<u64>,
    },
    /// Turn RGB/label raster pairs into an annotated manifest.
    Ingest {
        #[command(flatten)]
        common: Common,
    },
    /// Cut a manifest's images into resampled patches; split and subsample.
    Tile {
        #[command(flatten)]
        common: Common,
    },
    /// Mix real and artificial vehicles and backgrounds.
    Compose {
        #[command(flatten)]
        common: Common,
    },
    /// Average precision of detections against a manifest.
    Eval {
        #[command(flatten)]
        common: Common,
    },
    /// Write the recipes of an experiment grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// fig7 (real-size sweep), table2 (GSD sweep), table3 (ablation),
        /// table4 (composition) or all; overrides `grid`.
        grid: Option<String>,
    },
}

fn resolve(common: &Common, extra: Vec<(&str, Value)>) -> Result<RunConfig, CliError> {
    if let Some(n) = common.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let mut overrides = extra;
    if let Some(s) = common.seed {
        overrides.push(("seed", json!(s)));
    }
    RunConfig::resolve(common.config.as_deref(), &overrides, common.out.clone(), common.dry_run)
}

fn run(cli: Cli) -> Result<Value, CliError> {
    match cli.command {
        Command::Prepare { common } => commands::prepare(&resolve(&common, vec![])?),
        Command::Generate { common, images } => {
            let extra = images.map(|n| vec![("image_count", json!(n))]).unwrap_or_default();
            commands::generate(&resolve(&common, extra)?)
        }
        Command::Ingest { common } => commands::ingest(&resolve(&common, vec![])?),
        Command::Tile { common } => commands::tile(&resolve(&common, vec![])?),
        Command::Compose { common } => commands::compose(&resolve(&common, vec![])?),
        Command::Eval { common } => commands::evaluate(&resolve(&common, vec![])?),
        Command::Sweep { common, grid } => sweep::sweep(&resolve(&common, vec![])?, grid.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(v) => {
            // a closed pipe (e.g. `| head`) is not a failure
            let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&v).expect("json"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("aerosynth: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
