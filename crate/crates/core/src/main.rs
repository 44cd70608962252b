use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tavis::experiment::{convergence_report, crosscheck_classical, fmt_f64, run_experiment, ExperimentConfig};
use tavis::selftest::run_selftest;
use tavis::Error;

#[derive(Parser)]
#[command(name = "tavis", version, about = "Driven Tavis-Cummings simulator")]
struct Cli {
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate every configured frequency and write CSV panels.
    Run {
        config: PathBuf,
        /// Also compare against a run at twice the step resolution.
        #[arg(long)]
        convergence_check: bool,
    },
    /// Compare quantum and classical rapidity dynamics.
    Crosscheck {
        config: PathBuf,
        #[arg(long, default_value_t = 5)]
        cycles: usize,
    },
    /// Randomized invariant checks.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load(path: &PathBuf, out: &Option<PathBuf>) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(dir) = out {
        cfg.output_dir = dir.clone();
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            convergence_check,
        } => {
            let cfg = load(&config, &cli.out)?;
            if convergence_check {
                let cycles = cfg.cycles.clamp(1, 10);
                for (omega, dev) in convergence_report(&cfg, cycles)? {
                    println!("convergence omega={omega} deviation={}", fmt_f64(dev));
                }
            }
            let out = run_experiment(&cfg)?;
            for r in &out.results {
                let absorbed = r.absorbed_energy().map(fmt_f64).unwrap_or_else(|| "nan".into());
                let l1 = r
                    .fit
                    .as_ref()
                    .map(|f| fmt_f64(f.l1_distance))
                    .unwrap_or_else(|| "nan".into());
                println!("omega={} absorbed_energy={absorbed} l1_distance={l1}", r.omega);
            }
            for c in &out.crosschecks {
                println!(
                    "crosscheck omega={} max_distance={} passed={}",
                    c.omega,
                    fmt_f64(c.max_distance),
                    c.passed
                );
            }
            println!("wrote {} files to {}", out.files.len(), cfg.output_dir.display());
            Ok(())
        }
        Command::Crosscheck { config, cycles } => {
            let cfg = load(&config, &cli.out)?;
            let reports = crosscheck_classical(&cfg, cycles)?;
            let mut failed = None;
            for r in &reports {
                match r.halt {
                    Some((reason, time)) => {
                        println!("omega={} halted: {reason} at t={}", r.omega, fmt_f64(time));
                        failed.get_or_insert(Error::FlowHalted { reason, time });
                    }
                    None => {
                        println!(
                            "omega={} max_distance={} {}",
                            r.omega,
                            fmt_f64(r.max_distance),
                            if r.passed { "PASS" } else { "FAIL" }
                        );
                        if !r.passed {
                            failed.get_or_insert(Error::NoConvergence {
                                iterations: cycles,
                                residual: r.max_distance,
                            });
                        }
                    }
                }
            }
            failed.map_or(Ok(()), Err)
        }
        Command::Selftest { seed } => {
            let checks = run_selftest(seed);
            let mut ok = true;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            if ok {
                Ok(())
            } else {
                Err(Error::NoConvergence {
                    iterations: checks.len(),
                    residual: f64::NAN,
                })
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
