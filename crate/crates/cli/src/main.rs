//! `fedsel`: runs selection experiments and emits their artifacts.
//!
//! Exit status is 0 on success, 1 for an invalid config and 2 for any failure
//! after the config was accepted.

mod config;
mod experiment;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use config::{ExperimentConfig, OUTPUT_ROOT_ENV};

#[derive(Parser)]
#[command(
    name = "fedsel",
    version,
    about = "Federated party selection experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (strategy, seed) cell of an experiment config.
    Run { config: PathBuf },
    /// Turn round logs into `round,balanced_accuracy` series.
    PlotData {
        log_dir: PathBuf,
        /// Output directory. Defaults to `$FEDSEL_OUTPUT_ROOT/plot`, else `<log_dir>/plot`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the elbow curve of each seed's cohort as JSON.
    ClusterReport { config: PathBuf },
}

enum Failure {
    Config(config::ConfigError),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn load(path: &std::path::Path) -> Result<ExperimentConfig, Failure> {
    ExperimentConfig::load(path).map_err(Failure::Config)
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config } => {
            let cfg = load(&config)?;
            let root = cfg.output_root();
            let summaries = experiment::run(&cfg, &root)?;
            println!("{} jobs written to {}", summaries.len(), root.display());
        }
        Command::PlotData { log_dir, out } => {
            let out = out.unwrap_or_else(|| match std::env::var_os(OUTPUT_ROOT_ENV) {
                Some(r) if !r.is_empty() => PathBuf::from(r).join("plot"),
                _ => log_dir.join("plot"),
            });
            for f in plot::emit_plot_data(&log_dir, &out)? {
                println!("{}", f.display());
            }
        }
        Command::ClusterReport { config } => {
            let cfg = load(&config)?;
            let curves: Vec<_> = experiment::cluster_report(&cfg, &cfg.output_root())?
                .into_iter()
                .map(|(_, c)| c)
                .collect();
            let text = serde_json::to_string_pretty(&curves).map_err(anyhow::Error::from)?;
            println!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprint!("{e}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
