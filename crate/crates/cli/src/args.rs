use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qma_core::metrics::IdealConvention;
use qma_core::{AdderVariant, ResetModel};

#[derive(Debug, Parser)]
#[command(name = "qma", version, about = "Build, analyze and simulate quantum modulo (2^n+1) adders")]
pub struct Cli {
    /// key = value settings applied under the command-line flags
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one adder as OpenQASM 3
    #[command(visible_alias = "export")]
    Build(BuildArgs),
    /// Resource counts and depths, with reductions relative to the first variant
    Analyze(AnalyzeArgs),
    /// Run one input through one adder
    Simulate(SimulateArgs),
    /// Score adders over their whole input domain under noise
    Experiment(ExperimentArgs),
    /// NMED and FOM side by side, one row per variant
    Sweep(ExperimentArgs),
    /// Check adders against reference arithmetic on every valid input
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Table,
}

pub fn parse_variant(s: &str) -> Result<AdderVariant, String> {
    s.parse().map_err(|e: qma_core::builders::UnknownVariant| e.to_string())
}

fn parse_reset_model(s: &str) -> Result<ResetModel, String> {
    s.parse()
}

fn parse_ideal(s: &str) -> Result<IdealConvention, String> {
    s.parse()
}

#[derive(Debug, Clone, Args)]
pub struct VariantSelection {
    /// Adder variants (qma1..qma4)
    #[arg(value_parser = parse_variant)]
    pub variants: Vec<AdderVariant>,
    /// All four variants
    #[arg(long, conflicts_with = "variants")]
    pub all: bool,
}

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    /// Noise overrides: `zero`, or key=value with keys x, cnot, toffoli,
    /// gate (all three), idle, delta
    #[arg(long, num_args = 1.., value_name = "SETTING")]
    pub noise: Vec<String>,
    /// How back-to-back resets combine
    #[arg(long, value_parser = parse_reset_model, value_name = "purify|independent")]
    pub reset_model: Option<ResetModel>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(value_parser = parse_variant)]
    pub variant: AdderVariant,
    #[arg(long)]
    pub n: Option<u32>,
    /// Output file; QASM goes to stdout when omitted
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub select: VariantSelection,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(value_parser = parse_variant)]
    pub variant: AdderVariant,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(short, long)]
    pub a: u128,
    #[arg(short, long)]
    pub b: u128,
    /// Noisy shots; without this flag the run is exact
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long, env = "QMA_SEED")]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub select: VariantSelection,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long, env = "QMA_SEED")]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Enumerate every basis input; out-of-domain rows are reported unscored
    #[arg(long)]
    pub full_basis: bool,
    #[arg(long, value_parser = parse_ideal, value_name = "plus-one|pre-decrement")]
    pub ideal_convention: Option<IdealConvention>,
    /// Also score the regular-sum register against a + b
    #[arg(long)]
    pub score_sum: bool,
    /// Exit 3 unless NMED strictly decreases across the selected variants
    #[arg(long)]
    pub check_ordering: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub select: VariantSelection,
    /// Exponent or inclusive range such as 1..6
    #[arg(long)]
    pub n: Option<String>,
    /// Verify a QASM file carrying a layout comment instead of built adders
    #[arg(long, conflicts_with_all = ["variants", "all"])]
    pub qasm: Option<PathBuf>,
}
