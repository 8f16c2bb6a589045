// NaN-rejecting guards are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blowup_cli::bundle::json_bytes;
use blowup_cli::run::{evolve, tune};
use blowup_cli::{check_bundle, list_checks, load_scenario, run_scenario};
use blowup_core::verifier::CheckReport;
use blowup_core::LabError;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "blowup", version, about = "Blow-up lab for the critical semilinear wave equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its bundle.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "resolution-scale")]
        resolution_scale: Option<f64>,
    },
    /// Re-evaluate the checks of a bundle.
    Check { bundle: PathBuf },
    /// Print the tuned sigma and theta of a scenario.
    Tune {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "resolution-scale")]
        resolution_scale: Option<f64>,
    },
    /// List the available checks.
    ListChecks,
}

fn code(e: &LabError) -> u8 {
    match e {
        LabError::Config(_) => 2,
        _ => 3,
    }
}

/// Prints to stdout, ignoring a closed pipe.
macro_rules! out {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

fn print_reports(reports: &[CheckReport]) {
    for r in reports {
        out!(
            "{:<28} {:<14} residual={:.3e} tolerance={:.3e}",
            r.name,
            format!("{:?}", r.status),
            r.residual,
            r.tolerance
        );
    }
}

fn prepare(
    config: &Path,
    seed: Option<u64>,
    scale: Option<f64>,
) -> Result<blowup_cli::scenario::Scenario, LabError> {
    let mut sc = load_scenario(config)?;
    if let Some(s) = seed {
        sc = sc.with_seed(s);
    }
    if let Some(f) = scale {
        sc = sc.scaled(f).map_err(|e| LabError::Config(e.to_string()))?;
    }
    Ok(sc)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::ListChecks => {
            for (name, desc) in list_checks() {
                out!("{name:<22} {desc}");
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, out, seed, resolution_scale } => {
            let sc = match prepare(&config, seed, resolution_scale) {
                Ok(sc) => sc,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(code(&e));
                }
            };
            let dir = out.unwrap_or_else(|| PathBuf::from(format!("bundles/{}", sc.name)));
            let outcome = run_scenario(&sc);
            if let Err(e) = outcome.bundle.write(&dir) {
                eprintln!("error: {e}");
                return ExitCode::from(3);
            }
            print_reports(&outcome.reports);
            if let Some(e) = &outcome.error {
                eprintln!("error: {e} (bundle marked incomplete)");
            }
            out!("bundle written to {}", dir.display());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Command::Check { bundle } => match check_bundle(&bundle) {
            Ok(reports) => {
                print_reports(&reports);
                if reports.iter().all(|r| r.passed) {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(code(&e))
            }
        },
        Command::Tune { config, seed, resolution_scale } => {
            let result = prepare(&config, seed, resolution_scale).and_then(|sc| {
                let run = evolve(&sc, &sc.params)?;
                tune(&sc, &run)
            });
            match result {
                Ok((sigma, theta)) => {
                    let v = serde_json::json!({ "sigma": sigma, "theta": theta });
                    let _ = std::io::stdout().lock().write_all(&json_bytes(&v).unwrap_or_default());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(code(&e))
                }
            }
        }
    }
}
