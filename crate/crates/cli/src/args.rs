// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "seqar", version, about = "Sequential model selection for varying-coefficient AR(1) models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one trajectory and write it as CSV.
    Simulate(PipelineArgs),
    /// Run the sequential estimator and the weight selection on one trajectory.
    Estimate(PipelineArgs),
    /// Monte-Carlo risk table over sample sizes and noise families.
    RiskTable(PipelineArgs),
    /// Pinsker constant and the signal-dependent normalization.
    Pinsker(PinskerArgs),
    /// Expansion coefficients of the selected estimate.
    Beta(PipelineArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gating {
    PerPoint,
    Global,
}

/// Flags shared by the pipeline commands. Every field is optional so that a
/// config file can fill what the command line leaves out.
#[derive(Clone, Debug, Default, Args)]
pub struct PipelineArgs {
    /// s1, s2 or series:<file> (TOML or JSON signal description).
    #[arg(long)]
    pub signal: Option<String>,
    /// gaussian, uniform, bounded:<R> or all.
    #[arg(long)]
    pub noise: Option<String>,
    /// Sample size; a comma-separated list for risk-table.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Monte-Carlo replications.
    #[arg(long = "M")]
    pub replications: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Penalty coefficient, in (0, 1/12].
    #[arg(long)]
    pub delta: Option<f64>,
    /// Exponent of the preliminary block length, in (0, 1).
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long, value_enum)]
    pub gating: Option<Gating>,
    /// Bypass the sequential stage with the exact regression sample.
    #[arg(long)]
    pub debug_noiseless: bool,
    /// Smoothness for the efficiency report (risk-table).
    #[arg(long)]
    pub k: Option<u32>,
    /// Sobolev radius for the efficiency report (risk-table).
    #[arg(long)]
    pub r: Option<f64>,
    /// Number of recovered coefficients (beta); defaults to 64 d.
    #[arg(long)]
    pub i_max: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub format: Option<Vec<Format>>,
    /// TOML file with defaults for any of the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct PinskerArgs {
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    #[arg(long)]
    pub r: f64,
    /// Also report the noise integral and normalization for this signal.
    #[arg(long)]
    pub signal: Option<String>,
    /// Write pinsker.csv / pinsker.json here in addition to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub format: Option<Vec<Format>>,
}
