use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use retirement_cli::{run, Command, RunConfig, RunOptions};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Subcommand {
    /// Print derived constants and the assumption report.
    Validate,
    /// Solve the retirement boundary and write boundary.csv.
    Boundary,
    /// Evaluate feedback policies on a state grid and write policy.csv.
    Primal,
    /// Compare the boundary with the lattice and Monte Carlo oracles.
    Oracle,
    /// Repeat a solve over the values of one axis.
    Sweep,
}

#[derive(Debug, Parser)]
#[command(name = "retirement", version, about = "Optimal retirement boundary solver")]
struct Args {
    #[arg(value_enum)]
    command: Subcommand,
    /// Run config (TOML). Without it the baseline calibration is used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Run even if a standing assumption fails; outputs are watermarked.
    #[arg(long)]
    allow_assumption_override: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match &args.config {
        Some(path) => RunConfig::load(path),
        None => RunConfig::parse(""),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let command = match args.command {
        Subcommand::Validate => Command::Validate,
        Subcommand::Boundary => Command::Boundary,
        Subcommand::Primal => Command::Primal,
        Subcommand::Oracle => Command::Oracle,
        Subcommand::Sweep => Command::Sweep,
    };
    let opts = RunOptions {
        out: args.out,
        seed: args.seed,
        allow_assumption_override: args.allow_assumption_override,
    };
    match run(command, &cfg, &opts) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            for file in &report.files {
                println!("wrote {}", file.display());
            }
            for v in &report.violations {
                eprintln!("violation: {v}");
            }
            if report.success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
