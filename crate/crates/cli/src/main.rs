use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};

mod commands;
mod config;
mod table;
mod verify;

use config::{parse_cycle, parse_finite, Command, Format, RunConfig, StrategySpec, SweepSpec};
use passive_engine::engine::CycleParams;
use table::Report;

const EXIT_DOMAIN: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Work extraction from passive states with swap-cycle engines.
#[derive(Parser)]
#[command(name = "passive-engine", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// Diagonal state, comma separated
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_finite, conflicts_with = "beta")]
    state: Option<Vec<f64>>,
    /// Use the thermal state at this inverse temperature
    #[arg(long, global = true, value_parser = parse_finite)]
    beta: Option<f64>,
    /// Energy levels, comma separated and non-decreasing
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_finite)]
    energies: Option<Vec<f64>>,
    /// Hot swaps per cycle
    #[arg(long, global = true)]
    m: Option<usize>,
    /// Cold swaps per cycle
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Hot-gap sweep LO:HI:STEPS
    #[arg(long, global = true)]
    sweep_gap: Option<SweepSpec>,
    /// Trajectory strategy: energy, entropy or alpha=X
    #[arg(long, global = true)]
    strategy: Option<StrategySpec>,
    /// Grid resolution of the passive triangle
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Cycles as M:N pairs, comma separated
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_cycle)]
    cycles: Option<Vec<CycleParams>>,
    /// Largest machine dimension m + n to search
    #[arg(long, global = true)]
    max_dim: Option<usize>,
    /// Output file; standard output when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// JSON config or report; flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, hide = true, value_parser = parse_finite)]
    inject_perturbation: Option<f64>,
}

fn resolve(cli: Cli) -> Result<RunConfig, String> {
    let o = cli.opts;
    let mut c = match &o.config {
        Some(path) => config::load(path)?,
        None => RunConfig::new(cli.command),
    };
    c.command = cli.command;
    if o.state.is_some() {
        c.beta = None;
    }
    if o.beta.is_some() {
        c.state = None;
    }
    macro_rules! take {
        ($($f:ident),*) => {$( if o.$f.is_some() { c.$f = o.$f; } )*};
    }
    take!(state, beta, energies, m, n, sweep_gap, strategy, grid, cycles, max_dim, out, inject_perturbation);
    if let Some(f) = o.format {
        c.format = f;
    }
    c.validate()?;
    Ok(c)
}

fn render(config: &RunConfig, results: table::Table) -> String {
    match config.format {
        Format::Csv => results.to_csv(),
        Format::Json => Report {
            config: config.clone(),
            results,
        }
        .to_json(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match resolve(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let results = match commands::dispatch(&config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_DOMAIN);
        }
    };
    let failed = config.command == Command::Verify && !verify::all_passed(&results);
    let text = render(&config, results);
    let written = match &config.out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_DOMAIN);
    }
    if failed {
        eprintln!("error: verification failed");
        return ExitCode::from(EXIT_DOMAIN);
    }
    ExitCode::SUCCESS
}
