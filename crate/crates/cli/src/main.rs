//! `sfic`: focused model selection for stationary Gaussian series.

mod commands;
mod config;
mod io;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "sfic",
    version,
    about = "Spectral focused information criterion toolkit"
)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Monte Carlo replications.
    #[arg(long = "B", global = true)]
    replications: Option<usize>,
    /// Quadrature node count override.
    #[arg(long, global = true)]
    quad_nodes: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Whittle fits of every parametric candidate.
    Fit,
    /// FIC ranking for a single focus.
    Fic,
    /// AFIC ranking over weighted foci.
    Afic,
    /// Draw one Gaussian series from the truth model.
    Simulate,
    /// Monte Carlo comparison of selection strategies.
    Mc,
    /// Least-false parameters and autocovariances under the truth model.
    LeastFalse,
    /// Built-in simulation designs: fig1, fig3, fig4, fig5, fig6.
    Reproduce { figure: String },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit => "fit",
            Command::Fic => "fic",
            Command::Afic => "afic",
            Command::Simulate => "simulate",
            Command::Mc => "mc",
            Command::LeastFalse => "least-false",
            Command::Reproduce { .. } => "reproduce",
        }
    }
}

/// Exit status of a completed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Report written, but at least one candidate failed.
    Partial,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(c) = &cfg.command {
        if c != cli.command.name() {
            anyhow::bail!(
                "config is for command '{c}' but '{}' was invoked",
                cli.command.name()
            );
        }
    }
    cfg.command = Some(cli.command.name().to_string());
    if let Some(out) = &cli.out {
        cfg.out = Some(out.display().to_string());
    }
    cfg.seed = cli.seed.or(cfg.seed);
    cfg.workers = cli.workers.or(cfg.workers);
    cfg.replications = cli.replications.or(cfg.replications);
    cfg.quad_nodes = cli.quad_nodes.or(cfg.quad_nodes);
    commands::dispatch(&cli.command, cfg)
}
