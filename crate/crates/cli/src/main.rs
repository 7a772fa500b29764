use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use wptrx_cli::{dispatch, parse_with_overrides, resolve_out_dir, Command, DEFAULT_CONFIG, OUT_ENV};

/// Analysis toolkit for the buck converter stage of a wireless power receiver.
#[derive(Parser)]
#[command(name = "wptrx", version, about)]
struct Cli {
    command: Command,

    /// Configuration file; the bundled prototype configuration when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,

    /// Output directory (falls back to $WPTRX_OUT, then output.dir).
    #[arg(short, long)]
    out: Option<PathBuf>,

    /// Extra `key=value` settings applied after the file.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match &cli.config {
        Some(path) => match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("wptrx: {}: {e}", path.display());
                return ExitCode::FAILURE;
            }
        },
        None => DEFAULT_CONFIG.to_string(),
    };
    let cfg = match parse_with_overrides(&text, &cli.overrides) {
        Ok(c) => c,
        Err(e) => {
            let source = cli.config.as_ref().map_or("bundled config".into(), |p| p.display().to_string());
            eprintln!("wptrx: {source}: {e}");
            return ExitCode::FAILURE;
        }
    };
    let env = std::env::var(OUT_ENV).ok();
    let dir = resolve_out_dir(cli.out.as_deref(), env.as_deref(), &cfg);
    match dispatch(cli.command, &cfg, &dir) {
        Ok(report) => {
            println!("{}", report.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("wptrx: {e}");
            ExitCode::FAILURE
        }
    }
}
