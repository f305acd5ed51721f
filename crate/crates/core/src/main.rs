//! Command-line entry point.

use blowup_lab::cli;
use blowup_lab::config::{parse_config, RunConfig, Subcommand};
use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;

/// Numerical laboratory for type II blow-up of `u_t = Δu + u⁵` in 3d.
#[derive(Parser, Debug)]
#[command(name = "blowup-lab", version, about)]
struct Args {
    /// Subcommand: profiles | ansatz | residual | nonlocal | abel | simulate | report
    subcommand: String,

    /// Plain-text key=value config file ('#' comments). Absent keys use
    /// documented defaults.
    #[arg(short, long)]
    config: Option<PathBuf>,

    /// Output directory (overrides the config's out_dir).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn run(args: &Args) -> blowup_lab::Result<()> {
    let sub = Subcommand::parse(&args.subcommand)?;
    let mut cfg: RunConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            parse_config(&text)?
        }
        None => parse_config("")?,
    };
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    for warning in &cfg.params.warnings {
        eprintln!("warning: waived constraint {warning}");
    }
    cli::run_subcommand(sub, &cfg)?;
    println!("{}: artifacts written to {}", sub.name(), cfg.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
