//! Command-line syntax.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "tea", version, about = "Out-of-order core model, ISA model, and refinement checker for transient-execution bugs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assemble a program and print it in canonical form or as a snapshot.
    Asm(AsmArgs),
    /// Simulate a program until it halts or the step budget runs out.
    Run(RunArgs),
    /// Simulate with a per-cycle trace on stdout (same as `run --trace`).
    Trace(RunArgs),
    /// Run obligation suites or properties over generated inputs, or replay
    /// a counterexample bundle.
    Check(CheckArgs),
    /// Run a bundled attack and show what leaks.
    Demo(DemoArgs),
    /// Measure simulation throughput on the primality program.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Machine {
    /// The architectural machine.
    Isa,
    /// The pipelined machine.
    Ma,
    /// The pipelined machine with its history record.
    #[value(name = "ma-h")]
    MaH,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Machine parameters in key=value form.
    #[arg(long, value_name = "FILE")]
    pub params: Option<PathBuf>,
    /// Override one parameter (repeatable), e.g. `--set rs-count=6`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct AsmArgs {
    /// Assembly file, or the name of a bundled program.
    pub program: String,
    /// Print the initial machine state instead of the program text.
    #[arg(long, value_enum)]
    pub snapshot: Option<Machine>,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Assembly file, or the name of a bundled program.
    pub program: String,
    #[arg(long, value_enum, default_value = "ma")]
    pub machine: Machine,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_steps: u64,
    /// Write per-cycle records to FILE, or to stdout without a value.
    #[arg(long, value_name = "FILE", num_args = 0..=1)]
    pub trace: Option<Option<PathBuf>>,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Suite to run.
    #[arg(long, conflicts_with_all = ["property", "replay"])]
    pub suite: Option<String>,
    /// Single property to run.
    #[arg(long, conflicts_with = "replay")]
    pub property: Option<String>,
    /// Re-check a counterexample bundle.
    #[arg(long, value_name = "BUNDLE")]
    pub replay: Option<PathBuf>,
    /// Generated cases per property.
    #[arg(long, default_value_t = tea_testgen::runner::DEFAULT_TRIALS)]
    pub trials: u64,
    #[arg(long, env = "TEA_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Steps checked from each generated state.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Scatter generated programs instead of generating contiguous blocks.
    #[arg(long)]
    pub sparse: bool,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
    /// Write a replay bundle for each reported counterexample into DIR.
    #[arg(long, value_name = "DIR")]
    pub bundles: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Attack {
    Meltdown,
    Spectre,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(value_enum)]
    pub attack: Attack,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Wall-clock time spent on each machine.
    #[arg(long, default_value_t = 1.0)]
    pub seconds: f64,
    /// Input to the primality program.
    #[arg(long, default_value_t = tea_asm::corpus::primality::N)]
    pub n: u32,
    #[command(flatten)]
    pub params: ParamArgs,
}
