mod args;
mod commands;
mod config;
mod error;
mod render;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use config::FileConfig;
use error::CliError;

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match &cli.command {
        Command::Build(a) => commands::cmd_build(a, &cfg),
        Command::Analyze(a) => commands::cmd_analyze(a, &cfg),
        Command::Simulate(a) => commands::cmd_simulate(a, &cfg),
        Command::Experiment(a) => commands::cmd_experiment(a, &cfg, false),
        Command::Sweep(a) => commands::cmd_experiment(a, &cfg, true),
        Command::Verify(a) => commands::cmd_verify(a, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
