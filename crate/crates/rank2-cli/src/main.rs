use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rank2_cli::Suite;

/// Verification runner for rank-2 commuting difference operators.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Suite to run.
    #[arg(value_enum)]
    suite: Suite,
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.json and the CSV tables.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance override, `name=value`. Repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = rank2_cli::run(cli.suite, &cli.config, &cli.out, cli.seed, &cli.tol);
    ExitCode::from(code as u8)
}
