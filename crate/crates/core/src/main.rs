use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fracburgers::cli::{exit_code, parse_config, run, Command, OUT_DIR_ENV};

/// Mild-solution laboratory for the time-space fractional stochastic Burgers equation.
#[derive(Parser, Debug)]
#[command(name = "fracburgers", version)]
struct Args {
    /// simulate | picard | regularity | moments | operator-bounds | verify-specfun
    command: Command,
    /// key=value config file; defaults apply when omitted
    config: Option<PathBuf>,
    /// Override the master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: $FRACBURGERS_OUT_DIR, else the current directory)
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Override the number of Monte Carlo paths
    #[arg(long)]
    paths: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match &args.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", p.display());
                return ExitCode::from(1);
            }
        },
        None => String::new(),
    };
    let mut config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    config.command = args.command;
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(n) = args.paths {
        config.n_paths = n;
    }
    let out_dir = args
        .out_dir
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    match run(&config, &out_dir) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
