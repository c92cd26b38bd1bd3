use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use decolab::scenario::{figure_text, run_scenario, ScenarioConfig, ScenarioError};

#[derive(Parser)]
#[command(name = "decolab", version, about = "Compute entanglement-based decoherence measures for open quantum systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario configuration and write its D_e series as CSV.
    Run {
        config: PathBuf,
        /// Output path; overrides the configuration. Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of time points; overrides the configuration.
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        quiet: bool,
    },
    /// Write plot data: 1 = plane wave in a box, 2 = Gaussian packet.
    Figures {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=2))]
        which: u8,
        #[arg(long)]
        out: PathBuf,
    },
}

fn write_output(path: Option<&PathBuf>, bytes: &[u8]) -> Result<(), ScenarioError> {
    match path {
        Some(p) => fs::write(p, bytes)?,
        None => io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn run(command: Command) -> Result<(), ScenarioError> {
    match command {
        Command::Run { config, out, seed, points, quiet } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(points) = points {
                cfg.grid.points = points;
            }
            cfg.validate()?;
            let series = run_scenario(&cfg)?;
            let target = out.or_else(|| cfg.output.clone());
            write_output(target.as_ref(), series.to_csv().as_bytes())?;
            if !quiet {
                eprintln!(
                    "{}: {} rows, max |analytic - numeric| = {:.3e}",
                    cfg.scenario.name(),
                    series.len(),
                    series.max_discrepancy()
                );
            }
            Ok(())
        }
        Command::Figures { which, out } => write_output(Some(&out), &figure_text(which)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("decolab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
