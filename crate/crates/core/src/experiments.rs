//! Seeded Monte Carlo sweeps comparing the equilibrium, random splitting and
//! the centralized grid optimum.
//!
//! Trial `t` of sweep value `v` draws from ChaCha stream `(v << 32) | t`
//! under the master seed, in a fixed order: channel gains, the game's
//! starting profile, then the random scheme's profile. Trials run in parallel
//! but are reduced sequentially in trial order, so results do not depend on
//! the worker count.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{centralized_optimum_with, random_profile_with, GridSpec, MAX_CENTRALIZED_LINKS};
use crate::channel::{build_parallel_geometry_with, db_to_linear, sample_channels_with, trial_rng, NetworkScenario, Protocol};
use crate::error::{Error, Result};
use crate::game::{random_ratios, solve_with, InitialProfile, SolverOptions};
use crate::metrics::{coefficients, link_rates_with};

/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959963984540054;

pub const DEFAULT_TRIALS: usize = 2000;
/// Path-loss exponent used when a template does not set one.
pub const DEFAULT_TAU: f64 = 5.0;
pub const FULL_TRIALS: usize = 10_000;

/// Parameters of a family of parallel-link scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTemplate {
    pub links: usize,
    /// One entry for all links, or one per link.
    pub powers_db: Vec<f64>,
    /// One entry for all links, or one per link.
    pub protocols: Vec<Protocol>,
    /// Lateral distance between the outermost links.
    pub d_max: f64,
    /// One entry for all links, or one per link.
    pub relay_fractions: Vec<f64>,
    pub tau: f64,
    pub eta: f64,
    pub sigma2: f64,
}

impl Default for ScenarioTemplate {
    fn default() -> Self {
        Self {
            links: 2,
            powers_db: vec![15.0],
            protocols: vec![Protocol::Af],
            d_max: 1.0,
            relay_fractions: vec![0.5],
            tau: DEFAULT_TAU,
            eta: 0.5,
            sigma2: 1.0,
        }
    }
}

fn per_link<T: Clone>(field: &str, values: &[T], n: usize) -> Result<Vec<T>> {
    match values.len() {
        1 => Ok(vec![values[0].clone(); n]),
        len if len == n => Ok(values.to_vec()),
        len => Err(Error::config(format!("{field}: expected 1 or {n} entries, got {len}"))),
    }
}

impl ScenarioTemplate {
    pub fn build(&self) -> Result<NetworkScenario<f64>> {
        let n = self.links;
        let powers = per_link("powers_db", &self.powers_db, n)?.into_iter().map(db_to_linear).collect();
        let protocols = per_link("protocols", &self.protocols, n)?;
        let fractions = per_link("relay_fractions", &self.relay_fractions, n)?;
        let geometries = build_parallel_geometry_with(n, self.d_max, &fractions)?;
        NetworkScenario::new(powers, geometries, protocols, self.tau, self.eta, self.sigma2)
    }

    /// The template with `parameter` set to `value`.
    pub fn with_parameter(&self, parameter: SweepParameter, value: f64) -> Result<Self> {
        let mut t = self.clone();
        match parameter {
            SweepParameter::InterLinkDistance => t.d_max = value,
            SweepParameter::PowerDb => t.powers_db = vec![value],
            SweepParameter::LinkCount => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::config(format!("link_count values must be positive integers, got {value}")));
                }
                t.links = value as usize;
            }
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    InterLinkDistance,
    LinkCount,
    PowerDb,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::InterLinkDistance => "inter_link_distance",
            SweepParameter::LinkCount => "link_count",
            SweepParameter::PowerDb => "power_db",
        }
    }
}

impl std::str::FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inter_link_distance" => Ok(Self::InterLinkDistance),
            "link_count" => Ok(Self::LinkCount),
            "power_db" => Ok(Self::PowerDb),
            other => Err(Error::config(format!(
                "unknown sweep parameter `{other}` (expected inter_link_distance, link_count or power_db)"
            ))),
        }
    }
}

/// Variants are declared in name order, which is also the CSV row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Centralized,
    Game,
    Random,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Centralized => "centralized",
            Scheme::Game => "game",
            Scheme::Random => "random",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centralized" => Ok(Self::Centralized),
            "game" => Ok(Self::Game),
            "random" => Ok(Self::Random),
            other => Err(Error::config(format!("unknown scheme `{other}` (expected game, random or centralized)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub template: ScenarioTemplate,
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub trials: usize,
    pub schemes: Vec<Scheme>,
    pub master_seed: u64,
    /// Tolerances for the game scheme; the starting profile is drawn per trial.
    pub solver: SolverOptions<f64>,
    pub centralized_resolution: f64,
}

impl SweepConfig {
    pub fn new(template: ScenarioTemplate, parameter: SweepParameter, values: Vec<f64>) -> Self {
        Self {
            template,
            parameter,
            values,
            trials: DEFAULT_TRIALS,
            schemes: vec![Scheme::Game, Scheme::Random],
            master_seed: 0,
            solver: SolverOptions::default(),
            centralized_resolution: 1e-3,
        }
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_schemes(mut self, schemes: &[Scheme]) -> Self {
        self.schemes = schemes.to_vec();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    /// Checks everything that can be checked before any trial runs and returns
    /// the scenario for each sweep value.
    pub fn validate(&self) -> Result<Vec<NetworkScenario<f64>>> {
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.values.is_empty() {
            return Err(Error::config("sweep values must not be empty"));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("at least one scheme is required"));
        }
        self.solver.validate()?;
        GridSpec::new(self.centralized_resolution, true)?;
        let scenarios = self
            .values
            .iter()
            .map(|v| self.template.with_parameter(self.parameter, *v)?.build())
            .collect::<Result<Vec<_>>>()?;
        if self.schemes.contains(&Scheme::Centralized) {
            if let Some(s) = scenarios.iter().find(|s| s.n() > MAX_CENTRALIZED_LINKS) {
                return Err(Error::config(format!(
                    "centralized scheme needs at most {MAX_CENTRALIZED_LINKS} links, sweep reaches {}",
                    s.n()
                )));
            }
        }
        Ok(scenarios)
    }

    fn schemes_sorted(&self) -> Vec<Scheme> {
        let mut s = self.schemes.clone();
        s.sort();
        s.dedup();
        s
    }
}

/// Mean with a normal-approximation 95% half-width (NaN for one sample).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
}

impl MeanCi {
    pub fn of(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let half_width = if samples.len() < 2 {
            f64::NAN
        } else {
            let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
            Z_95 * (var / n).sqrt()
        };
        Self { mean, half_width }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub trials: usize,
    pub sum_rate: MeanCi,
    /// Ratio averaged over links, then over trials.
    pub rho: MeanCi,
    pub mean_best_rate: f64,
    pub mean_worst_rate: f64,
    /// Game only.
    pub mean_iterations: Option<f64>,
    /// Game only: trials that hit the iteration cap.
    pub failures: usize,
    /// Game only, when the centralized scheme also ran:
    /// per-trial `(centralized - game) / centralized`.
    pub relative_gap: Option<MeanCi>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub schemes: Vec<SchemeSummary>,
}

impl SweepPoint {
    pub fn scheme(&self, scheme: Scheme) -> Option<&SchemeSummary> {
        self.schemes.iter().find(|s| s.scheme == scheme)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.points.iter().flat_map(|p| &p.schemes).map(|s| s.failures).sum()
    }

    /// Column header of [`SweepResult::write_csv`].
    pub const CSV_HEADER: [&'static str; 11] = [
        "sweep_param",
        "value",
        "scheme",
        "mean_sum_rate",
        "ci_half_width",
        "mean_rho",
        "mean_best_rate",
        "mean_worst_rate",
        "mean_iterations",
        "trials",
        "config_digest",
    ];

    /// One row per (value, scheme), sorted by value then scheme name. Reals
    /// are written with 12 significant digits; undefined entries are empty.
    pub fn write_csv<W: Write>(&self, out: W, config_digest: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(Self::CSV_HEADER).map_err(io)?;
        let mut points: Vec<&SweepPoint> = self.points.iter().collect();
        points.sort_by(|a, b| a.value.total_cmp(&b.value));
        for p in points {
            let mut schemes: Vec<&SchemeSummary> = p.schemes.iter().collect();
            schemes.sort_by_key(|s| s.scheme);
            for s in schemes {
                w.write_record([
                    self.parameter.as_str().to_string(),
                    fmt_real(p.value),
                    s.scheme.as_str().to_string(),
                    fmt_real(s.sum_rate.mean),
                    fmt_real(s.sum_rate.half_width),
                    fmt_real(s.rho.mean),
                    fmt_real(s.mean_best_rate),
                    fmt_real(s.mean_worst_rate),
                    s.mean_iterations.map(fmt_real).unwrap_or_default(),
                    s.trials.to_string(),
                    config_digest.to_string(),
                ])
                .map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }

    pub fn to_csv_string(&self, config_digest: &str) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, config_digest)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }
}

fn fmt_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        String::new()
    }
}

/// Per-trial, per-scheme measurements.
#[derive(Debug, Clone, PartialEq)]
struct Sample {
    sum_rate: f64,
    mean_rho: f64,
    rates: Vec<f64>,
    iterations: usize,
    converged: bool,
}

impl Sample {
    fn new(rho: &[f64], rates: Vec<f64>, iterations: usize, converged: bool) -> Self {
        Self {
            sum_rate: rates.iter().sum(),
            mean_rho: rho.iter().sum::<f64>() / rho.len() as f64,
            rates,
            iterations,
            converged,
        }
    }
}

fn stream_id(value_index: usize, trial: usize) -> u64 {
    ((value_index as u64) << 32) | trial as u64
}

fn run_trial(
    config: &SweepConfig,
    scenario: &NetworkScenario<f64>,
    schemes: &[Scheme],
    value_index: usize,
    trial: usize,
) -> Result<Vec<Sample>> {
    let mut rng = trial_rng(config.master_seed, stream_id(value_index, trial));
    let channels = sample_channels_with(scenario, &mut rng);
    let start: Vec<f64> = random_ratios(scenario.n(), &mut rng);
    let random = random_profile_with::<f64, _>(scenario.n(), &mut rng)?;
    let coeffs = coefficients(scenario, &channels)?;
    let protocols = scenario.protocols();
    schemes
        .iter()
        .map(|scheme| match scheme {
            Scheme::Game => {
                let options = config.solver.clone().with_initial(InitialProfile::Explicit(start.clone()));
                let r = solve_with(&coeffs, protocols, &options)?;
                Ok(Sample::new(r.profile.as_slice(), r.rates, r.iterations, r.converged))
            }
            Scheme::Random => {
                let rates = link_rates_with(&coeffs, protocols, random.as_slice());
                Ok(Sample::new(random.as_slice(), rates, 0, true))
            }
            Scheme::Centralized => {
                let grid = GridSpec::new(config.centralized_resolution, true)?;
                let opt = centralized_optimum_with(&coeffs, protocols, &grid)?;
                let rates = link_rates_with(&coeffs, protocols, opt.profile.as_slice());
                Ok(Sample::new(opt.profile.as_slice(), rates, 0, true))
            }
        })
        .collect()
}

/// Runs every scheme on `config.trials` channel draws per sweep value.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    let scenarios = config.validate()?;
    let schemes = config.schemes_sorted();
    let mut points = Vec::with_capacity(scenarios.len());
    for (vi, (value, scenario)) in config.values.iter().zip(&scenarios).enumerate() {
        let trials: Vec<Vec<Sample>> = (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, scenario, &schemes, vi, t))
            .collect::<Result<_>>()?;
        let centralized_pos = schemes.iter().position(|s| *s == Scheme::Centralized);
        let summaries = schemes
            .iter()
            .enumerate()
            .map(|(si, scheme)| {
                let column: Vec<&Sample> = trials.iter().map(|t| &t[si]).collect();
                summarize(*scheme, &column, centralized_pos.map(|ci| trials.iter().map(|t| &t[ci]).collect()))
            })
            .collect::<Result<Vec<_>>>()?;
        points.push(SweepPoint { value: *value, schemes: summaries });
    }
    Ok(SweepResult { parameter: config.parameter, points })
}

fn summarize(scheme: Scheme, samples: &[&Sample], centralized: Option<Vec<&Sample>>) -> Result<SchemeSummary> {
    let sum_rates: Vec<f64> = samples.iter().map(|s| s.sum_rate).collect();
    let rhos: Vec<f64> = samples.iter().map(|s| s.mean_rho).collect();
    let per_trial_rates: Vec<Vec<f64>> = samples.iter().map(|s| s.rates.clone()).collect();
    let (best, worst) = best_worst_rates(&per_trial_rates)?;
    let is_game = scheme == Scheme::Game;
    let relative_gap = match (is_game, centralized) {
        (true, Some(c)) => {
            let gaps: Vec<f64> = samples
                .iter()
                .zip(&c)
                .map(|(g, c)| if c.sum_rate > 0.0 { (c.sum_rate - g.sum_rate) / c.sum_rate } else { 0.0 })
                .collect();
            Some(MeanCi::of(&gaps))
        }
        _ => None,
    };
    Ok(SchemeSummary {
        scheme,
        trials: samples.len(),
        sum_rate: MeanCi::of(&sum_rates),
        rho: MeanCi::of(&rhos),
        mean_best_rate: best,
        mean_worst_rate: worst,
        mean_iterations: is_game
            .then(|| samples.iter().map(|s| s.iterations as f64).sum::<f64>() / samples.len() as f64),
        failures: samples.iter().filter(|s| !s.converged).count(),
        relative_gap,
    })
}

/// Mean over trials of the best and of the worst link rate.
pub fn best_worst_rates(per_trial: &[Vec<f64>]) -> Result<(f64, f64)> {
    if per_trial.is_empty() || per_trial.iter().any(Vec::is_empty) {
        return Err(Error::config("best/worst rates need at least one trial with one link"));
    }
    let n = per_trial.len() as f64;
    let best = per_trial.iter().map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max)).sum::<f64>() / n;
    let worst = per_trial.iter().map(|r| r.iter().copied().fold(f64::INFINITY, f64::min)).sum::<f64>() / n;
    Ok((best, worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::solve;

    fn two_link(protocol: Protocol) -> ScenarioTemplate {
        ScenarioTemplate { protocols: vec![protocol], ..ScenarioTemplate::default() }
    }

    #[test]
    fn best_worst() {
        assert_eq!(best_worst_rates(&[vec![0.7]]).unwrap(), (0.7, 0.7));
        assert_eq!(best_worst_rates(&[vec![1.0, 2.0, 3.0]]).unwrap(), (3.0, 1.0));
        assert_eq!(best_worst_rates(&[vec![1.0, 2.0], vec![4.0, 0.0]]).unwrap(), (3.0, 0.5));
        assert!(best_worst_rates(&[]).is_err());
    }

    #[test]
    fn single_trial_passes_through() {
        let cfg = SweepConfig::new(two_link(Protocol::Df), SweepParameter::InterLinkDistance, vec![2.0])
            .with_trials(1)
            .with_schemes(&[Scheme::Game])
            .with_seed(17);
        let res = run_sweep(&cfg).unwrap();
        let g = res.points[0].scheme(Scheme::Game).unwrap();

        let scenario = cfg.template.with_parameter(cfg.parameter, 2.0).unwrap().build().unwrap();
        let mut rng = trial_rng(17, stream_id(0, 0));
        let channels = sample_channels_with(&scenario, &mut rng);
        let start: Vec<f64> = random_ratios(2, &mut rng);
        let ne = solve(&scenario, &channels, &cfg.solver.clone().with_initial(InitialProfile::Explicit(start))).unwrap();

        assert_eq!(g.sum_rate.mean, ne.sum_rate);
        assert!(g.sum_rate.half_width.is_nan());
        assert_eq!(g.rho.mean, ne.profile.mean());
        assert_eq!(g.mean_iterations, Some(ne.iterations as f64));
        let best = ne.rates.iter().copied().fold(f64::MIN, f64::max);
        assert_eq!(g.mean_best_rate, best);
        assert_eq!(g.failures, 0);
    }

    #[test]
    fn centralized_rejected_for_large_networks() {
        let cfg = SweepConfig::new(two_link(Protocol::Af), SweepParameter::LinkCount, vec![2.0, 4.0])
            .with_schemes(&[Scheme::Game, Scheme::Centralized]);
        assert!(matches!(run_sweep(&cfg), Err(Error::Config(_))));
        let ok = cfg.clone().with_schemes(&[Scheme::Game]).with_trials(3);
        assert!(run_sweep(&ok).is_ok());
    }

    #[test]
    fn invalid_configs() {
        let base = SweepConfig::new(two_link(Protocol::Af), SweepParameter::PowerDb, vec![10.0]);
        assert!(run_sweep(&base.clone().with_trials(0)).is_err());
        assert!(run_sweep(&SweepConfig { values: vec![], ..base.clone() }).is_err());
        assert!(run_sweep(&base.clone().with_schemes(&[])).is_err());
        let bad_count = SweepConfig::new(two_link(Protocol::Af), SweepParameter::LinkCount, vec![2.5]);
        assert!(run_sweep(&bad_count).is_err());
    }

    #[test]
    fn reruns_are_identical() {
        let cfg = SweepConfig::new(two_link(Protocol::Df), SweepParameter::InterLinkDistance, vec![1.0, 3.0])
            .with_trials(20)
            .with_schemes(&[Scheme::Random, Scheme::Game, Scheme::Centralized])
            .with_seed(5);
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a.to_csv_string("abc").unwrap(), b.to_csv_string("abc").unwrap());
    }

    #[test]
    fn csv_layout() {
        let cfg = SweepConfig::new(two_link(Protocol::Af), SweepParameter::InterLinkDistance, vec![3.0, 1.0])
            .with_trials(1)
            .with_schemes(&[Scheme::Random, Scheme::Game, Scheme::Centralized]);
        let csv = run_sweep(&cfg).unwrap().to_csv_string("d1g").unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], SweepResult::CSV_HEADER.join(","));
        assert_eq!(lines.len(), 1 + 2 * 3);
        let keys: Vec<(String, String)> = lines[1..]
            .iter()
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                (f[1].to_string(), f[2].to_string())
            })
            .collect();
        assert_eq!(keys[0], ("1.00000000000e0".to_string(), "centralized".to_string()));
        assert_eq!(keys[1].1, "game");
        assert_eq!(keys[2].1, "random");
        assert_eq!(keys[3].0, "3.00000000000e0");
        // trials = 1: the half-width is undefined and left empty.
        assert!(lines[1..].iter().all(|l| l.split(',').nth(4) == Some("")));
        assert!(lines[1..].iter().all(|l| l.ends_with(",1,d1g")));
    }

    #[test]
    fn mean_ci() {
        let m = MeanCi::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((m.half_width - Z_95 * sd / 2.0).abs() < 1e-15);
    }
}
