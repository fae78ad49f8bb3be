//! The three commands, independent of argument parsing and output sinks.

use std::time::Instant;

use serde::Serialize;
use swipt_ne::experiments::{run_sweep, SweepResult};
use swipt_ne::game::solve as solve_game;
use swipt_ne::verify::{run_battery, BatteryOptions, BatteryReport};
use swipt_ne::{Channels, Equilibrium, Scenario};

use crate::config::ConfigFile;
use crate::manifest::{digest, RunManifest};
use crate::CliError;

fn parse(config: &[u8]) -> Result<ConfigFile, CliError> {
    let text = std::str::from_utf8(config).map_err(|e| CliError::Config(format!("config is not UTF-8: {e}")))?;
    ConfigFile::parse(text)
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutput {
    pub scenario: Scenario,
    pub channels: Channels,
    pub profile: Vec<f64>,
    pub rates: Vec<f64>,
    pub sum_rate: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub manifest: RunManifest,
}

/// Solves one instance. A run that hits the iteration cap is still returned
/// with `converged = false`.
pub fn solve(config: &[u8], seed: Option<u64>) -> Result<SolveOutput, CliError> {
    let start = Instant::now();
    let file = parse(config)?;
    let seed = seed.or(file.seed).unwrap_or(0);
    let (scenario, channels) = file.instance(seed)?;
    let options = file.solver(scenario.n(), seed)?;
    let eq: Equilibrium = solve_game(&scenario, &channels, &options)?;
    Ok(SolveOutput {
        profile: eq.profile.into_inner(),
        rates: eq.rates,
        sum_rate: eq.sum_rate,
        iterations: eq.iterations,
        residual: eq.residual,
        converged: eq.converged,
        manifest: RunManifest::new("solve", digest(config), seed, start.elapsed().as_secs_f64()),
        scenario,
        channels,
    })
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub result: SweepResult,
    pub csv: String,
    pub manifest: RunManifest,
}

pub fn sweep(config: &[u8], seed: Option<u64>, trials: Option<usize>) -> Result<SweepOutput, CliError> {
    let start = Instant::now();
    let file = parse(config)?;
    let seed = seed.or(file.seed).unwrap_or(0);
    let sweep = file.sweep(seed, trials)?;
    let result = run_sweep(&sweep)?;
    let config_digest = digest(config);
    let csv = result.to_csv_string(&config_digest)?;
    let manifest = RunManifest::new("sweep", config_digest, seed, start.elapsed().as_secs_f64());
    Ok(SweepOutput { result, csv, manifest })
}

#[derive(Debug, Clone)]
pub struct VerifyOutput {
    pub report: BatteryReport,
    pub manifest: RunManifest,
}

pub fn verify(options: &BatteryOptions) -> Result<VerifyOutput, CliError> {
    let start = Instant::now();
    let canonical = format!(
        "verify seed={} instances={} starts={} triples={}",
        options.seed, options.instances, options.starts, options.axiom_triples
    );
    let report = run_battery(options)?;
    let manifest = RunManifest::new("verify", digest(canonical.as_bytes()), options.seed, start.elapsed().as_secs_f64());
    Ok(VerifyOutput { report, manifest })
}
