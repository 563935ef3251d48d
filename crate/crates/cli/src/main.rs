use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use trustdyn_cli::{stages, Pipeline, StageError};
use trustdyn_core::io::{parse_config_str, ClusteringMode, PipelineConfig};

#[derive(Parser)]
#[command(name = "trustdyn", version, about = "Simulate, fit, cluster and classify trust trajectories")]
struct Cli {
    /// key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed; overrides the configuration file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the configuration file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Clustering scope: per_level or pooled.
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort.
    Simulate,
    /// Fit every agent (maximum likelihood, then personalized replay).
    Fit {
        /// Trajectories to fit instead of the simulated ones.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Cluster fitted trajectories into archetypes.
    Cluster,
    /// Train and evaluate the archetype decision tree.
    Classify,
    /// Compare clusters statistically.
    Analyze,
    /// Write per-agent trust reports.
    Report {
        /// Only this agent.
        #[arg(long)]
        agent: Option<String>,
        /// Trajectories passed to `fit --input`, if any.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run every stage and write the run manifest.
    All,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, StageError> {
    let mut text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| StageError::config("config", format!("cannot read {}: {e}", path.display())))?,
        None => String::new(),
    };
    if let Some(seed) = cli.seed {
        text.push_str(&format!("\nseed={seed}\n"));
    }
    let mut cfg = parse_config_str(&text).map_err(|e| StageError::config("config", e))?;
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(mode) = &cli.mode {
        cfg.clustering_mode = mode.parse::<ClusteringMode>().map_err(|e| StageError::config("config", e))?;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), StageError> {
    let mut pipeline = Pipeline::new(load_config(cli)?);
    pipeline.quiet = cli.quiet;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| StageError::config("config", e))?;
    pool.install(|| {
        let p = &pipeline;
        match &cli.command {
            Command::Simulate => stages::simulate(p).map(drop),
            Command::Fit { input } => stages::fit(p, input.as_deref()).map(drop),
            Command::Cluster => stages::cluster(p).map(drop),
            Command::Classify => stages::classify(p).map(drop),
            Command::Analyze => stages::analyze(p).map(drop),
            Command::Report { agent, input } => stages::report(p, agent.as_deref(), input.as_deref()).map(drop),
            Command::All => p.all().map(drop),
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
