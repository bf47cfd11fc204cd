// SPDX-License-Identifier: MIT OR Apache-2.0

mod args;
mod commands;
mod config;
mod error;
mod output;

use clap::Parser;

use args::{Cli, Command};
use error::CliResult;

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => commands::simulate(&config::resolve("simulate", &a)?),
        Command::Estimate(a) => commands::estimate(&config::resolve("estimate", &a)?),
        Command::RiskTable(a) => commands::risk_table(&config::resolve("risk-table", &a)?),
        Command::Beta(a) => commands::beta(&config::resolve("beta", &a)?),
        Command::Pinsker(a) => commands::pinsker(&a),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
