//! `conegeo` command-line driver.
//!
//! Exit codes: 0 success, 1 other failure (including a failed self-test),
//! 2 convergence failure, 3 collapse or coincidence, 4 configuration error.

mod commands;
mod config;

use clap::{Parser, Subcommand, ValueEnum};
use commands::Ctx;
use conegeo::{Exec, GeoError};
use config::{ConfigError, RunConfig};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "conegeo", version, about = "Geodesics and min-max sweepouts on asymptotically conical surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write the sweepout of every min-max round.
    #[arg(long, global = true)]
    snapshots: bool,
    /// Seed for the random test curves.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override a configuration key, e.g. `--set discretization.n_nodes=64`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Flow an initial curve to a geodesic between two points.
    Geodesic,
    /// Minimizers, sweepout minimization and the mountain-pass geodesic.
    Minmax,
    /// Asymptotic diagnostics.
    Verify {
        #[arg(value_enum)]
        check: Check,
    },
    /// Lambda / r0^2 over the configured radii.
    SweepLambda,
    /// Invariant suites of every module.
    Selftest {
        /// Corrupt the energy gradient so the gradient check must fail.
        #[arg(long)]
        fault_gradient: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    GaussBonnet,
    Mass,
    BlowDown,
    NoDrift,
    Distinctness,
}

#[derive(Serialize)]
struct ErrorReport {
    error: &'static str,
    message: String,
    exit_code: u8,
}

fn classify(e: &anyhow::Error) -> (&'static str, u8) {
    if e.downcast_ref::<ConfigError>().is_some() {
        return ("config", 4);
    }
    match e.downcast_ref::<GeoError>() {
        Some(GeoError::NonConvergence(_) | GeoError::Stall { .. } | GeoError::NonGeodesic { .. }) => ("convergence", 2),
        Some(GeoError::Collapse { .. } | GeoError::Coincidence { .. }) => ("collapse", 3),
        Some(_) => ("geometry", 1),
        None => ("other", 1),
    }
}

fn fail(kind: &'static str, code: u8, message: String, out: Option<&PathBuf>) -> ExitCode {
    let rep = ErrorReport { error: kind, message, exit_code: code };
    let text = serde_json::to_string(&rep).unwrap_or_default();
    eprintln!("{text}");
    if let Some(dir) = out {
        let _ = commands::write_file(&dir.join("error.json"), &format!("{text}\n"));
    }
    ExitCode::from(code)
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), &cli.set)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let exec = match cli.workers {
        Some(0) => return Err(ConfigError("--workers must be >= 1".into()).into()),
        Some(1) => Exec::Sequential,
        Some(n) => {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
            Exec::Parallel
        }
        None => Exec::Parallel,
    };
    let ctx = Ctx { cfg, out: cli.out.clone(), exec, snapshots: cli.snapshots };
    match &cli.command {
        Command::Geodesic => commands::geodesic(&ctx)?,
        Command::Minmax => commands::minmax(&ctx)?,
        Command::SweepLambda => commands::sweep_lambda(&ctx)?,
        Command::Verify { check } => match check {
            Check::GaussBonnet => commands::verify_gauss_bonnet(&ctx)?,
            Check::Mass => commands::verify_mass(&ctx)?,
            Check::BlowDown => commands::verify_blow_down(&ctx)?,
            Check::NoDrift => commands::verify_no_drift(&ctx)?,
            Check::Distinctness => commands::verify_distinctness(&ctx)?,
        },
        Command::Selftest { fault_gradient } => return commands::selftest(&ctx, *fault_gradient),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => return fail("config", 4, e.to_string().trim_end().to_string(), None),
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => fail("selftest", 1, "one or more self-test suites failed".into(), Some(&cli.out)),
        Err(e) => {
            let (kind, code) = classify(&e);
            fail(kind, code, format!("{e:#}"), Some(&cli.out))
        }
    }
}
