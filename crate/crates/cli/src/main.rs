//! `sparc`: sparse superposition codes over the AWGN channel — analysis,
//! Monte Carlo decoding trials, per-size rate sweeps, and Reed-Solomon
//! concatenated runs.
//!
//! Every verb reads an optional `--config <file>` (TOML) merged with flag
//! overrides, runs, and writes `report.json` plus CSV companions to
//! `--out <dir>`. Exit codes: 0 success, 2 configuration problems, 3
//! runtime failure, 4 I/O failure; nonzero exits print one machine-readable
//! JSON object to stderr.

mod config;
mod report;
mod runner;
mod seeds;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use crate::config::{resolve, ExperimentConfig, Mode, Overrides};

#[derive(Parser)]
#[command(
    name = "sparc",
    version,
    about = "Sparse superposition codes: analysis, Monte Carlo, sweeps, concatenation"
)]
struct Cli {
    /// Experiment file (TOML); flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for report.json and CSV companions.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Rate, schedule, and reliability analysis at explicit knobs.
    Analyze(Overrides),
    /// Monte Carlo decoding trials.
    Montecarlo(Overrides),
    /// Per-size optimized rate sweep.
    Sweep(Overrides),
    /// Concatenated (outer Reed-Solomon) Monte Carlo trials.
    Concat(Overrides),
}

fn fail(code: u8, error: serde_json::Value) -> ExitCode {
    eprintln!("{error}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, overrides) = match &cli.command {
        Command::Analyze(o) => (Mode::Analyze, o),
        Command::Montecarlo(o) => (Mode::Montecarlo, o),
        Command::Sweep(o) => (Mode::Sweep, o),
        Command::Concat(o) => (Mode::Concat, o),
    };

    let mut cfg = match &cli.config {
        None => ExperimentConfig::default(),
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(text) => text,
                Err(e) => {
                    return fail(
                        4,
                        serde_json::json!({
                            "error": "io",
                            "path": path.display().to_string(),
                            "message": e.to_string(),
                        }),
                    )
                }
            };
            match toml::from_str(&text) {
                Ok(cfg) => cfg,
                Err(e) => {
                    return fail(
                        2,
                        serde_json::json!({
                            "error": "config",
                            "path": path.display().to_string(),
                            "problems": [e.to_string()],
                        }),
                    )
                }
            }
        }
    };
    overrides.apply(&mut cfg);

    let resolved = match resolve(cfg, mode) {
        Ok(resolved) => resolved,
        Err(problems) => {
            return fail(2, serde_json::json!({ "error": "config", "problems": problems }))
        }
    };

    let report = match runner::run(&resolved) {
        Ok(report) => report,
        Err(e) => return fail(3, e.to_json()),
    };

    match report::emit_report(&report, &cli.out) {
        Ok(paths) => {
            for path in paths {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(
            4,
            serde_json::json!({
                "error": "io",
                "path": cli.out.display().to_string(),
                "message": e.to_string(),
            }),
        ),
    }
}
