use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use swipt_ne::experiments::FULL_TRIALS;
use swipt_ne::verify::BatteryOptions;
use swipt_ne_cli::{commands, CliError};

#[derive(Parser)]
#[command(name = "swipt-ne", version, about = "Equilibrium power splitting for SWIPT relay interference channels")]
struct Cli {
    /// Worker threads for parallel trials (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the game on one channel realization and print JSON.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo sweep and write CSV plus a `<out>.manifest.json` sidecar.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// CSV file (default: stdout, manifest on stderr).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override `sweep.trials`.
        #[arg(long, conflicts_with = "full")]
        trials: Option<usize>,
        /// Use the full trial count.
        #[arg(long)]
        full: bool,
    },
    /// Run the randomized property battery.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        /// Random starts per instance for the uniqueness check.
        #[arg(long)]
        starts: Option<usize>,
        /// Axiom triples per instance.
        #[arg(long)]
        triples: Option<usize>,
        /// Write the report as JSON here as well.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_config(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn write_to(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable output") + "\n"
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    }
    match cli.command {
        Command::Solve { config, seed, out } => {
            let output = commands::solve(&read_config(&config)?, seed)?;
            let text = json(&output);
            match out {
                Some(path) => write_to(&path, &text)?,
                None => std::io::stdout().write_all(text.as_bytes())?,
            }
            if !output.converged {
                return Err(CliError::Numeric(format!(
                    "no convergence after {} iterations (residual {:.3e})",
                    output.iterations, output.residual
                )));
            }
        }
        Command::Sweep { config, seed, out, trials, full } => {
            let trials = if full { Some(FULL_TRIALS) } else { trials };
            let output = commands::sweep(&read_config(&config)?, seed, trials)?;
            let manifest = json(&output.manifest);
            match out {
                Some(path) => {
                    write_to(&path, &output.csv)?;
                    let mut sidecar = path.into_os_string();
                    sidecar.push(".manifest.json");
                    write_to(Path::new(&sidecar), &manifest)?;
                }
                None => {
                    std::io::stdout().write_all(output.csv.as_bytes())?;
                    eprint!("{manifest}");
                }
            }
            let failures = output.result.failures();
            if failures > 0 {
                return Err(CliError::Numeric(format!("{failures} trial(s) failed to converge")));
            }
        }
        Command::Verify { seed, instances, starts, triples, out } => {
            let defaults = BatteryOptions::default();
            let options = BatteryOptions {
                seed,
                instances,
                starts: starts.unwrap_or(defaults.starts),
                axiom_triples: triples.unwrap_or(defaults.axiom_triples),
                ..defaults
            };
            if instances == 0 {
                eprintln!("warning: 0 instances, every check passes vacuously");
            }
            let output = commands::verify(&options)?;
            print!("{}", output.report);
            if let Some(path) = out {
                let body = serde_json::json!({ "report": output.report, "manifest": output.manifest });
                write_to(&path, &json(&body))?;
            }
            if !output.report.passed() {
                return Err(CliError::Numeric("property battery failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
