//! `bdm`: runs one verification suite from a JSON config and writes its report.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bdm_core::parallel;
use bdm_core::suite::{output_format, run_suite, RunConfig, Suite};
use clap::{Args, Parser, Subcommand};

/// Worker-count override for the data-parallel kernels.
const WORKERS_ENV: &str = "BDM_WORKERS";

#[derive(Parser)]
#[command(name = "bdm", version, about = "Boutet de Monvel cocycle and index-pairing verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cocycle relations for φ1, φ3 on seeded symbol tuples.
    VerifyCocycle(RunArgs),
    /// Commutator trace, Stokes chain and dilation invariance of the trace.
    VerifyTrace(RunArgs),
    /// Crossed-product cocycle relations and the equivariant trace formula.
    VerifyEquivariant(RunArgs),
    /// Calibrated index pairing against winding and degree oracles.
    PairIndex(RunArgs),
    /// Convergence orders of the cocycle residuals under grid doubling.
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Report path; a `.csv` extension selects CSV unless the config fixes the format.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
}

fn load(suite: Suite, args: &RunArgs) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| format!("{}: {e}", args.config.display()))?;
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", args.config.display()))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| format!("{}: expected a JSON object", args.config.display()))?;
    match obj.get("suite") {
        None => {
            obj.insert("suite".into(), serde_json::to_value(suite).expect("suite serializes"));
        }
        Some(s) if s.as_str() == Some(suite.name()) => {}
        Some(s) => return Err(format!("config names suite {s}, command is {}", suite.name())),
    }
    let mut config: RunConfig = serde_json::from_value(value).map_err(|e| format!("{}: {e}", args.config.display()))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(tol) = args.tol {
        config.tolerance = tol;
    }
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn workers() -> Result<Option<usize>, String> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (suite, args) = match &cli.command {
        Command::VerifyCocycle(a) => (Suite::VerifyCocycle, a),
        Command::VerifyTrace(a) => (Suite::VerifyTrace, a),
        Command::VerifyEquivariant(a) => (Suite::VerifyEquivariant, a),
        Command::PairIndex(a) => (Suite::PairIndex, a),
        Command::Sweep(a) => (Suite::Sweep, a),
    };
    let (config, workers) = match load(suite, args).and_then(|c| Ok((c, workers()?))) {
        Ok(x) => x,
        Err(msg) => {
            eprintln!("bdm: configuration error: {msg}");
            return ExitCode::from(2);
        }
    };
    let out = match args.out.clone().or_else(|| config.output.path.clone()) {
        Some(p) => p,
        None => {
            eprintln!("bdm: configuration error: no output path (--out or output.path)");
            return ExitCode::from(2);
        }
    };
    let outcome = match parallel::with_workers(workers, || run_suite(&config)) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("bdm: {} failed: {e}", suite.name());
            return ExitCode::from(1);
        }
    };
    let replays = match outcome.write(&out, output_format(&config, &out)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("bdm: cannot write {}: {e}", out.display());
            return ExitCode::from(1);
        }
    };
    report_summary(&outcome.report, &out, &replays);
    ExitCode::from(outcome.exit_code() as u8)
}

fn report_summary(report: &bdm_core::suite::Report, out: &Path, replays: &[PathBuf]) {
    let failed = report.rows.iter().filter(|r| !r.pass).count();
    println!(
        "{}: {} ({} rows, {} failing) -> {}",
        report.suite.name(),
        if report.pass { "pass" } else { "FAIL" },
        report.rows.len(),
        failed,
        out.display()
    );
    for p in replays {
        println!("  replay: {}", p.display());
    }
}
