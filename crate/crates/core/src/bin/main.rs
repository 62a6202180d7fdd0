use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use ellipsoid_entropy::codec::{quantize, read_signal, recovery_box, PrecisionProfile};
use ellipsoid_entropy::experiment::{
    cmd_bound, cmd_count, cmd_sweep, cmd_verify, write_json, write_rows, ExperimentConfig,
    ModeChoice, OutputFormat, ProfileSpec, RunOptions, VerifyReport, SCHEMA_VERSION,
};
use ellipsoid_entropy::Error;

const THREADS_VAR: &str = "ELLIPSOID_ENTROPY_THREADS";

/// Exact codebook sizes, entropy bounds and their verification.
#[derive(Debug, Parser)]
#[command(name = "ellipsoid-entropy", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment configuration; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    mode: Option<ModeChoice>,

    /// Node budget of the recursive counter.
    #[arg(long, global = true)]
    budget: Option<u64>,

    /// Cell budget of the dynamic-programming counter.
    #[arg(long, global = true)]
    dp_budget: Option<u64>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,

    /// Dimensions, e.g. `2,3,4` or `2..12`.
    #[arg(long, global = true)]
    k: Option<String>,

    /// Radii, e.g. `2,4.5,20`.
    #[arg(long = "r", global = true)]
    r: Option<String>,

    /// Uniform precision for every coordinate.
    #[arg(long, global = true)]
    eps: Option<f64>,

    /// Record wall-clock time per row (makes output non-reproducible).
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact codebook size for every instance.
    Count,
    /// Bound reports with exact counts where the budget allows.
    Bound,
    /// Bound rows across a grid, with the residual band and crossovers.
    Sweep,
    /// Run every verification suite.
    Verify,
    /// Quantize one signal file and print its code and recovery box.
    Quantize {
        #[arg(long)]
        signal: PathBuf,
    },
}

/// Failure classes mapped to exit codes.
enum Failure {
    Violation(String),
    Config(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BudgetExceeded { .. }
            | Error::IncompleteSpectrum { .. }
            | Error::NonFinite(_) => Failure::Violation(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Failure::Config(format!("bad {what} value '{s}'")))
        })
        .collect()
}

fn parse_k_list(text: &str) -> Result<Vec<usize>, Failure> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b) = (
                parse_list::<usize>(a, "k")?,
                parse_list::<usize>(b.trim_start_matches('='), "k")?,
            );
            match (a.as_slice(), b.as_slice()) {
                ([a], [b]) if a <= b => out.extend(*a..=*b),
                _ => return Err(Failure::Config(format!("bad k range '{part}'"))),
            }
        } else {
            out.extend(parse_list::<usize>(part, "k")?);
        }
    }
    Ok(out)
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_path(path)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?,
        None => ExperimentConfig::default(),
    };
    if let Some(m) = cli.mode {
        cfg.mode = m;
    }
    if let Some(b) = cli.budget {
        cfg.count_budget = b;
    }
    if let Some(b) = cli.dp_budget {
        cfg.dp_budget = b;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(k) = &cli.k {
        cfg.k_list = parse_k_list(k)?;
    }
    if let Some(r) = &cli.r {
        cfg.r_list = parse_list(r, "R")?;
    }
    if let Some(eps) = cli.eps {
        cfg.profile = ProfileSpec::Uniform { eps };
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn output(cli: &Cli) -> Result<Box<dyn Write>, Failure> {
    Ok(match &cli.out {
        Some(path) => {
            Box::new(BufWriter::new(File::create(path).map_err(|e| {
                Failure::Config(format!("{}: {e}", path.display()))
            })?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_verify_csv(rep: &VerifyReport, w: &mut dyn Write) -> ellipsoid_entropy::Result<()> {
    writeln!(w, "# schema_version={SCHEMA_VERSION}")?;
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["suite", "passed", "checks", "skipped", "counterexample"])?;
    for s in &rep.suites {
        let ce = s
            .counterexample
            .as_ref()
            .map(|v| v.to_string())
            .unwrap_or_default();
        wtr.write_record([
            s.name.clone(),
            s.passed.to_string(),
            s.checks.to_string(),
            s.skipped.to_string(),
            ce,
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    let opts = RunOptions {
        timings: cli.timings,
    };
    let mut w = output(cli)?;
    match &cli.command {
        Command::Count => {
            let rows = cmd_count(&cfg, opts)?;
            write_rows(&rows, cli.format, &mut w)?;
        }
        Command::Bound => {
            let out = cmd_bound(&cfg, opts)?;
            match cli.format {
                OutputFormat::Csv => write_rows(&out.rows, cli.format, &mut w)?,
                OutputFormat::Json => write_json(&out, &mut w)?,
            }
            w.flush().map_err(Error::from)?;
            if out.violations > 0 {
                return Err(Failure::Violation(format!(
                    "{} certified bound(s) fall below the exact count",
                    out.violations
                )));
            }
        }
        Command::Sweep => {
            let out = cmd_sweep(&cfg, opts)?;
            match cli.format {
                OutputFormat::Csv => {
                    write_rows(&out.rows, cli.format, &mut w)?;
                    eprintln!(
                        "{}",
                        serde_json::to_string(&out.summary).map_err(Error::from)?
                    );
                }
                OutputFormat::Json => write_json(&out, &mut w)?,
            }
            w.flush().map_err(Error::from)?;
            if out.summary.violations > 0 {
                return Err(Failure::Violation(format!(
                    "{} certified bound(s) fall below the exact count",
                    out.summary.violations
                )));
            }
        }
        Command::Verify => {
            let rep = cmd_verify(&cfg);
            for warning in &rep.warnings {
                eprintln!("warning: {warning}");
            }
            match cli.format {
                OutputFormat::Csv => write_verify_csv(&rep, &mut w)?,
                OutputFormat::Json => write_json(&rep, &mut w)?,
            }
            w.flush().map_err(Error::from)?;
            if let Some(failed) = rep.first_failure() {
                let detail =
                    json!({ "suite": failed.name, "counterexample": failed.counterexample });
                return Err(Failure::Violation(detail.to_string()));
            }
        }
        Command::Quantize { signal } => {
            let f = read_signal(signal)?;
            let profile = match &cfg.profile {
                ProfileSpec::Uniform { eps } => PrecisionProfile::uniform(f.k(), *eps)?,
                _ => cfg.profile_for(f.k())?,
            };
            let u = quantize(&f, &profile)?;
            let b = recovery_box(&u);
            let value = json!({
                "codes": u.codes(),
                "energy": f.energy(),
                "scaled_energy": u.scaled_energy(),
                "box": { "lo": b.lo(), "hi": b.hi(), "cells": b.cells() },
            });
            write_json(&value, &mut w)?;
        }
    }
    w.flush().map_err(Error::from)?;
    Ok(())
}

fn init_threads() -> Result<(), Failure> {
    let Ok(text) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = text.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        Failure::Config(format!(
            "{THREADS_VAR} must be a positive integer, got '{text}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
