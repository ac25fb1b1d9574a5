use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bair",
    version = env!("BAIR_BUILD_ID"),
    about = "Best-arm identification against a simulated explorative user"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads for replications (default: all available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Suppress progress messages on standard error.
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment cell, or a grid read from a config file.
    Simulate(SimulateArgs),
    /// Reproduce one of the preset comparison tables.
    Table(TableArgs),
    /// Run a suite of self-checks; exits 0 only if every check passes.
    Validate(ValidateArgs),
    /// Build the lower-bound instance pair and probe a policy on it.
    Lowerbound(LowerboundArgs),
    /// Print the resolved grid and the constants each cell derives.
    Inspect(InspectArgs),
}

/// Cell parameters. Each one overrides the matching field of every cell in a
/// config file; lists of deltas or arm counts expand the grid.
#[derive(Debug, Clone, Default, Args)]
pub struct CellFlags {
    /// Confidence level(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub delta: Option<Vec<f64>>,
    /// Number(s) of arms, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    /// Gap between the best and second-best arm.
    #[arg(long)]
    pub gap: Option<f64>,
    /// User exploration tendency.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Trust multiplier: `linear` or `constant:<value>`.
    #[arg(long)]
    pub rho: Option<String>,
    /// Probability that the user answers with a coin flip.
    #[arg(long = "noise-p")]
    pub noise_p: Option<f64>,
    /// Instances per cell.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Master seed; every random stream derives from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated list from bair, uni, exp3, ts.
    #[arg(long)]
    pub algos: Option<String>,
    /// Phase-1 acceptance budget: an integer or default, sqrtk, logk, k.
    #[arg(long)]
    pub n1: Option<String>,
    /// Rejections needed to eliminate an arm in Phase 2.
    #[arg(long)]
    pub m: Option<u64>,
    /// Independent runs on each instance.
    #[arg(long = "runs-per-instance")]
    pub runs_per_instance: Option<usize>,
    /// Horizon of UNI and EXP3: BAIR's mean stop time per instance or per cell.
    #[arg(long = "budget-matching", value_enum)]
    pub budget_matching: Option<BudgetArg>,
    /// UNI draws arms at random or cycles through them.
    #[arg(long = "uni-mode", value_enum)]
    pub uni_mode: Option<UniModeArg>,
    /// Read Phase-1's stopping clause as a count of acceptances or of steps.
    #[arg(long = "phase1-stop", value_enum)]
    pub phase1_stop: Option<Phase1StopArg>,
    /// Count Phase-2 rejections per arm consecutively or cumulatively.
    #[arg(long, value_enum)]
    pub strikes: Option<StrikesArg>,
    /// Share reward and user noise across algorithms on an instance.
    #[arg(long)]
    pub coupled: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BudgetArg {
    PerInstance,
    PerCell,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum UniModeArg {
    Random,
    RoundRobin,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Phase1StopArg {
    Acceptances,
    Steps,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrikesArg {
    Consecutive,
    Cumulative,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputFlags {
    /// Write results here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json (tables also accept text).
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON grid: {"cells": [...]}.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub cell: CellFlags,
    /// Run Phase 1 once per instance and compare Phase-2 contenders from
    /// the same user state.
    #[arg(long = "shared-phase1")]
    pub shared_phase1: bool,
    #[command(flatten)]
    pub output: OutputFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Table2,
    Table3,
    Table4,
    Table7,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(value_enum)]
    pub preset: Preset,
    #[command(flatten)]
    pub cell: CellFlags,
    #[command(flatten)]
    pub output: OutputFlags,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SuiteArg {
    Unit,
    Properties,
    Statistical,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(value_enum)]
    pub suite: SuiteArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct LowerboundArgs {
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.25)]
    pub c: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gap: f64,
    /// Trust multiplier of the simulated user: `linear` or `constant:<value>`.
    #[arg(long, default_value = "linear")]
    pub rho: String,
    #[arg(long, default_value_t = 10_000)]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Policy to probe: bair, uni, exp3 or ts.
    #[arg(long, default_value = "bair")]
    pub algo: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub cell: CellFlags,
}
