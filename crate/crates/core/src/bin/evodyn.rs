use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use evodyn::config::parse_config;
use evodyn::run::{run, Command, RunError};

#[derive(Parser)]
#[command(
    name = "evodyn",
    version,
    about = "Best-response dynamics in binary aggregate games"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Common {
    /// Scenario file (INI).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// `section.key=value`, applied after the file; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Sub {
    /// Aggregate equilibria with stability and basins.
    Equilibria(Common),
    /// Integrate the heterogeneous dynamic from the initial composition.
    Simulate(Common),
    /// Certified critical masses and distributional basins.
    CriticalMass(Common),
    /// Robustness thresholds and the most robust equilibrium.
    Select(Common),
    /// Switching-rate and deficit distributions of the initial composition.
    Flows(Common),
    /// Bound trajectory and escape certificate.
    Escape(Common),
}

impl Sub {
    fn split(self) -> (Command, Common) {
        match self {
            Sub::Equilibria(c) => (Command::Equilibria, c),
            Sub::Simulate(c) => (Command::Simulate, c),
            Sub::CriticalMass(c) => (Command::CriticalMass, c),
            Sub::Select(c) => (Command::Select, c),
            Sub::Flows(c) => (Command::Flows, c),
            Sub::Escape(c) => (Command::Escape, c),
        }
    }
}

fn main() -> ExitCode {
    let (command, common) = Cli::parse().command.split();
    let result = parse_config(&common.config, &common.overrides)
        .map_err(RunError::from)
        .and_then(|scenario| run(&scenario, command, &common.out));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
