//! `mellin-radon <validate|forward|invert|diagnose|selftest> [--config PATH] [--mode M] [--out PATH] [--level L]`
//!
//! Exit status: 0 success, 2 validation failure, 3 numerical failure, 4 I/O.
//! `MELLIN_RADON_THREADS` sets the worker count; results do not depend on it.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use mellin_radon::cli::{self, Mode, SceneConfig};
use mellin_radon::selftest::Level;
use mellin_radon::{Error, Result};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Validate,
    Forward,
    Invert,
    Diagnose,
    Selftest,
}

#[derive(Debug, Parser)]
#[command(name = "mellin-radon", version, about = "Generalized Radon transforms on the positive orthant")]
struct Args {
    command: Command,
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// radon, kernel or profit.
    #[arg(long, value_name = "M", default_value = "radon")]
    mode: String,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// quick or full.
    #[arg(long, value_name = "L", default_value = "quick")]
    level: String,
    /// Data file for invert; overrides `data` in the config.
    #[arg(long, value_name = "PATH")]
    data: Option<PathBuf>,
    /// Test hook: perturbs one Lanczos coefficient.
    #[arg(long, hide = true)]
    inject_gamma_fault: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Ok(n) = std::env::var("MELLIN_RADON_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: MELLIN_RADON_THREADS must be a positive integer, got {n:?}");
                return ExitCode::from(cli::EXIT_VALIDATION as u8);
            }
        }
    }
    if args.inject_gamma_fault {
        mellin_radon::mellin_engine::gamma::inject_gamma_fault(true);
    }
    match run(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}

fn run(args: &Args) -> Result<i32> {
    match args.command {
        Command::Validate => {
            let summary = cli::cmd_validate(&config(args)?);
            emit(args.out.as_deref(), &cli::to_json(&summary))?;
            Ok(if summary.passed { cli::EXIT_OK } else { cli::EXIT_VALIDATION })
        }
        Command::Forward => {
            let out = require_out(args)?;
            let (g, meta) = cli::cmd_forward(&config(args)?, Mode::parse(&args.mode)?)?;
            std::fs::write(out, g.to_csv_string())?;
            std::fs::write(cli::sidecar(out), cli::to_json(&meta))?;
            Ok(cli::EXIT_OK)
        }
        Command::Invert => {
            let out = require_out(args)?;
            let cfg = config(args)?;
            let data_path = args
                .data
                .clone()
                .or_else(|| cfg.data.clone())
                .ok_or_else(|| Error::Argument("invert needs --data or [inversion] data".into()))?;
            let data = cli::config::read_grid_csv(&data_path)?;
            let inv = cli::cmd_invert(&cfg, Mode::parse(&args.mode)?, &data)?;
            std::fs::write(out, inv.estimate.to_csv_string())?;
            std::fs::write(cli::sidecar(out), cli::to_json(&inv.report))?;
            Ok(cli::EXIT_OK)
        }
        Command::Diagnose => {
            let cfg = config(args)?;
            let (report, heatmap) = cli::cmd_diagnose(&cfg, Mode::parse(&args.mode)?)?;
            if let (Some(path), Some(csv)) = (&cfg.heatmap, heatmap) {
                std::fs::write(path, csv)?;
            }
            emit(args.out.as_deref(), &cli::to_json(&report))?;
            Ok(cli::EXIT_OK)
        }
        Command::Selftest => {
            let results = cli::cmd_selftest(Level::parse(&args.level)?);
            emit(args.out.as_deref(), &cli::selftest_table(&results))?;
            let failures = cli::selftest_failures(&results);
            for identity in &failures {
                eprintln!("selftest failed: {identity}");
            }
            Ok(if failures.is_empty() { cli::EXIT_OK } else { cli::EXIT_NUMERICAL })
        }
    }
}

fn config(args: &Args) -> Result<SceneConfig> {
    let path = args
        .config
        .as_deref()
        .ok_or_else(|| Error::Argument("this command needs --config".into()))?;
    SceneConfig::load(path)
}

fn require_out(args: &Args) -> Result<&Path> {
    args.out
        .as_deref()
        .ok_or_else(|| Error::Argument("this command needs --out".into()))
}

/// Writes to `path`, or to stdout when absent.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
