//! `orbitlab` command line: `enumerate`, `volume`, `orbit`, `asymptotics`, `report`.

mod commands;
mod config;
mod emit;

use std::ffi::OsString;
use std::fs::OpenOptions;
use std::path::{Path, PathBuf};

use clap::Parser;

pub use config::{parse_config, parse_kv_file, RunConfig, Subcommand};
pub use emit::{emit_report, format_float, render_report, Cell, Format, Report, Table};

use crate::error::{Error, Result};
use crate::exact_arith::set_arch_precision;

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "ORBITLAB_THREADS";

#[derive(Parser)]
#[command(name = "orbitlab", version, about = "Lattice-ball enumeration, exact volumes and orbit equidistribution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Enumerate or count a lattice ball.
    Enumerate(Args),
    /// Exact and numeric ball volumes.
    Volume(Args),
    /// Orbit equidistribution experiment.
    Orbit(Args),
    /// Fit `c t^d (log t)^e` per residue class to a volume CSV.
    Asymptotics(Args),
    /// Merge CSV files with a common header.
    Report(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Flat `key = value` config file; command-line settings take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    json: Option<String>,
    /// CSV table path.
    #[arg(long)]
    csv: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    /// Settings as KEY=VALUE.
    #[arg(value_name = "KEY=VALUE")]
    settings: Vec<String>,
}

fn split_settings(args: &Args) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut bad = Vec::new();
    for s in &args.settings {
        match s.split_once('=') {
            Some((k, v)) => out.push((k.trim().to_string(), v.trim().to_string())),
            None => bad.push(format!("expected KEY=VALUE, got {s:?}")),
        }
    }
    if !bad.is_empty() {
        return Err(Error::Config(bad));
    }
    for (k, v) in [("json", &args.json), ("csv", &args.csv), ("threads", &args.threads)] {
        if let Some(v) = v {
            out.push((k.to_string(), v.clone()));
        }
    }
    Ok(out)
}

fn check_writable(path: &Path) -> Result<()> {
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map(drop)
        .map_err(|e| Error::Config(vec![format!("cannot write {}: {e}", path.display())]))
}

fn configure_threads(cfg: &RunConfig) -> Result<()> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(vec![format!("{THREADS_ENV} must be a non-negative integer")]))?,
        ),
        Err(_) => cfg.threads,
    };
    if let Some(n) = threads {
        // A pool may already exist when called more than once in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Run one validated configuration and write its outputs.
pub fn execute(cfg: &RunConfig) -> Result<Report> {
    for path in cfg.json_out.iter().chain(&cfg.csv_out) {
        check_writable(path)?;
    }
    configure_threads(cfg)?;
    set_arch_precision(cfg.precision);
    let report = match cfg.subcommand {
        Subcommand::Enumerate => commands::enumerate(cfg)?,
        Subcommand::Volume => commands::volume(cfg)?,
        Subcommand::Orbit => commands::orbit(cfg)?,
        Subcommand::Asymptotics => commands::asymptotics(cfg)?,
        Subcommand::Report => commands::report(cfg)?,
    };
    if let Some(p) = &cfg.json_out {
        emit_report(&report, Format::Json, p)?;
    }
    if let Some(p) = &cfg.csv_out {
        emit_report(&report, Format::Csv, p)?;
    }
    Ok(report)
}

fn run_inner(cli: Cli) -> Result<()> {
    let (sub, args) = match &cli.command {
        Command::Enumerate(a) => (Subcommand::Enumerate, a),
        Command::Volume(a) => (Subcommand::Volume, a),
        Command::Orbit(a) => (Subcommand::Orbit, a),
        Command::Asymptotics(a) => (Subcommand::Asymptotics, a),
        Command::Report(a) => (Subcommand::Report, a),
    };
    let cfg = parse_config(sub, &split_settings(args)?, args.config.as_deref())?;
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    let report = execute(&cfg)?;
    if cfg.json_out.is_none() && cfg.csv_out.is_none() {
        print!("{}", render_report(&report, Format::Json)?);
    }
    Ok(())
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_inner(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
