use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use phasefield_topo::cli::{parse_config, run_experiment_with_progress, Preset};

/// Run a phase-field experiment described by a `key = value` config file.
#[derive(Parser, Debug)]
#[command(name = "simulate", version)]
struct Args {
    /// Config file; keys it sets override the preset.
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Built-in parameter set applied before the config file
    /// (table1-large, table1-small, dumbbell2d).
    #[arg(long)]
    preset: Option<Preset>,
    /// Print every N-th logged step to stderr (0 disables).
    #[arg(long, default_value_t = 0)]
    progress: usize,
}

fn run(args: Args) -> anyhow::Result<bool> {
    let cfg = parse_config(&args.config, args.preset)?;
    let out = args.out.unwrap_or_else(|| cfg.output.clone());
    let summary = run_experiment_with_progress(&cfg, &out, args.progress).with_context(|| format!("experiment {}", args.config.display()))?;
    print!("{}", summary.to_text());
    println!("output: {}", out.display());
    Ok(summary.success)
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
