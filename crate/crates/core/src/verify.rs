//! Randomized property battery for the best-response map and the solver.
//!
//! Each instance is a random parallel-link network with its own channel
//! draw. Instance `k` of a battery uses ChaCha stream `k` under the battery
//! seed, so a report depends only on the seed and the options.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{grid_best_response_with, GridSpec};
use crate::channel::{
    build_parallel_geometry_with, db_to_linear, fixture_two_link_with, sample_channels_with, trial_rng,
    ChannelRealization, NetworkScenario, Protocol,
};
use crate::error::{Error, Result};
use crate::game::{
    best_response, best_response_af, c_d_of, check_standard_axioms, kappa, random_ratios, solve_with, AxiomTrial,
    InitialProfile, SolverOptions,
};
use crate::metrics::{coefficients, sinr_df, LinkCoefficients};

/// Grid step of the best-response oracle.
pub const ORACLE_RESOLUTION: f64 = 1e-4;
/// Allowed distance between a closed-form best response and the oracle.
pub const ORACLE_TOLERANCE: f64 = 2e-4;
/// Bound on `|g1 - g2| / max(g1, 1)` at a DF best response.
pub const DF_EQUALITY_TOLERANCE: f64 = 1e-9;
/// Bound on the coordinate spread of equilibria reached from different starts.
pub const UNIQUENESS_TOLERANCE: f64 = 1e-6;
/// Grid step of the unimodality and derivative-sign scans.
pub const UNIMODAL_RESOLUTION: f64 = 1e-3;
/// Scan intervals closer than this to the best response are not sign-checked.
pub const KAPPA_EXCLUSION: f64 = 1e-3;

/// Which relaying protocols a random instance uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolMix {
    Af,
    Df,
    /// Each link independently AF or DF with equal probability.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstanceSpec {
    pub min_links: usize,
    pub max_links: usize,
    pub mix: ProtocolMix,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        Self { min_links: 2, max_links: 6, mix: ProtocolMix::Mixed }
    }
}

impl InstanceSpec {
    pub fn with_mix(mix: ProtocolMix) -> Self {
        Self { mix, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub scenario: NetworkScenario<f64>,
    pub channels: ChannelRealization<f64>,
}

impl Instance {
    /// The two-link fixture network with the given protocols.
    pub fn fixture(protocols: [Protocol; 2]) -> Self {
        let (scenario, channels) = fixture_two_link_with(protocols);
        Self { scenario, channels }
    }

    pub fn coefficients(&self) -> Result<Vec<LinkCoefficients<f64>>> {
        coefficients(&self.scenario, &self.channels)
    }
}

/// A random network: powers uniform in [0, 30] dB, lateral span in [0.1, 5],
/// relay positions in [0.1, 0.9] of the link, path-loss exponent in [2, 5],
/// harvesting efficiency in [0.05, 1], unit noise, then one channel draw.
pub fn random_instance<R: Rng + ?Sized>(spec: &InstanceSpec, rng: &mut R) -> Result<Instance> {
    if spec.min_links == 0 || spec.min_links > spec.max_links {
        return Err(Error::config(format!("invalid link range {}..={}", spec.min_links, spec.max_links)));
    }
    let n = rng.random_range(spec.min_links..=spec.max_links);
    let d_max = if n == 1 { 0.0 } else { rng.random_range(0.1..=5.0) };
    let powers: Vec<f64> = (0..n).map(|_| db_to_linear(rng.random_range(0.0..=30.0))).collect();
    let fractions: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..=0.9)).collect();
    let tau = rng.random_range(2.0..=5.0);
    let eta = rng.random_range(0.05..=1.0);
    let protocols = (0..n)
        .map(|_| match spec.mix {
            ProtocolMix::Af => Protocol::Af,
            ProtocolMix::Df => Protocol::Df,
            ProtocolMix::Mixed => {
                if rng.random::<bool>() {
                    Protocol::Df
                } else {
                    Protocol::Af
                }
            }
        })
        .collect();
    let geometries = build_parallel_geometry_with(n, d_max, &fractions)?;
    let scenario = NetworkScenario::new(powers, geometries, protocols, tau, eta, 1.0)?;
    let channels = sample_channels_with(&scenario, rng);
    Ok(Instance { scenario, channels })
}

/// Case and violation counts of one check, with the largest error seen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Tally {
    pub cases: usize,
    pub violations: usize,
    pub worst: f64,
}

impl Tally {
    fn record(&mut self, error: f64, bound: f64) {
        self.cases += 1;
        if !(error <= bound) {
            self.violations += 1;
        }
        if error > self.worst || error.is_nan() {
            self.worst = error;
        }
    }

    pub fn merge(&mut self, other: &Tally) {
        self.cases += other.cases;
        self.violations += other.violations;
        if other.worst > self.worst || other.worst.is_nan() {
            self.worst = other.worst;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Closed-form best responses against the grid oracle, one random opponent
/// profile per link. The second tally holds the DF hop-equality errors at
/// the same best responses.
pub fn check_best_responses<R: Rng + ?Sized>(instance: &Instance, rng: &mut R) -> Result<(Tally, Tally)> {
    let coeffs = instance.coefficients()?;
    let grid = GridSpec::new(ORACLE_RESOLUTION, true)?;
    let mut oracle = Tally::default();
    let mut equality = Tally::default();
    for (c, protocol) in coeffs.iter().zip(instance.scenario.protocols()) {
        let rho: Vec<f64> = random_ratios(coeffs.len(), rng);
        let br = best_response(c, *protocol, &rho)?;
        let w = c.w_of(&rho);
        let (argmax, _) = grid_best_response_with(c, *protocol, w, &grid);
        oracle.record((br - argmax).abs(), ORACLE_TOLERANCE);
        if *protocol == Protocol::Df {
            let s = sinr_df(c, br, w);
            equality.record((s.first_hop - s.second_hop).abs() / s.first_hop.max(1.0), DF_EQUALITY_TOLERANCE);
        }
    }
    Ok((oracle, equality))
}

/// Positivity, monotonicity and scalability over `triples` random
/// `(rho, rho', alpha)` with `rho' <= rho` and `alpha` in [1.01, 3].
/// A violation is a triple failing any axiom; `worst` is unused.
pub fn check_axioms<R: Rng + ?Sized>(instance: &Instance, triples: usize, rng: &mut R) -> Result<Tally> {
    let n = instance.scenario.n();
    let trials: Vec<AxiomTrial<f64>> = (0..triples)
        .map(|_| {
            let rho: Vec<f64> = random_ratios(n, rng);
            let rho_prime = rho.iter().map(|r| r * rng.random::<f64>()).collect();
            let alpha = rng.random_range(1.01..=3.0);
            AxiomTrial { rho, rho_prime, alpha }
        })
        .collect();
    let report = check_standard_axioms(&instance.scenario, &instance.channels, &trials)?;
    Ok(Tally { cases: report.trials, violations: report.violations(), worst: 0.0 })
}

/// Solves from `starts` random profiles. A violation is an instance where
/// some run misses the residual tolerance or the runs disagree by more
/// than [`UNIQUENESS_TOLERANCE`] in some coordinate; `worst` is the largest
/// coordinate spread.
pub fn check_uniqueness<R: Rng + ?Sized>(
    instance: &Instance,
    starts: usize,
    solver: &SolverOptions<f64>,
    rng: &mut R,
) -> Result<Tally> {
    let coeffs = instance.coefficients()?;
    let protocols = instance.scenario.protocols();
    let n = coeffs.len();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    let mut all_converged = true;
    for _ in 0..starts {
        let start: Vec<f64> = random_ratios(n, rng);
        let r = solve_with(&coeffs, protocols, &solver.clone().with_initial(InitialProfile::Explicit(start)))?;
        all_converged &= r.converged && r.residual <= solver.fixed_point_tolerance;
        for (i, v) in r.profile.as_slice().iter().enumerate() {
            lo[i] = lo[i].min(*v);
            hi[i] = hi[i].max(*v);
        }
    }
    let spread = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
    let mut t = Tally::default();
    t.record(if all_converged { spread } else { f64::INFINITY }, UNIQUENESS_TOLERANCE);
    t.worst = spread;
    Ok(t)
}

/// For every AF link and a random opponent profile: the utility sampled on
/// the scan grid must rise then fall, and away from the best response the
/// sign of each forward difference must match the sign of `kappa` at its
/// left end. Returns the unimodality and the sign tallies.
pub fn check_unimodality<R: Rng + ?Sized>(instance: &Instance, rng: &mut R) -> Result<(Tally, Tally)> {
    let coeffs = instance.coefficients()?;
    let k = (1.0 / UNIMODAL_RESOLUTION).round() as usize;
    let mut unimodal = Tally::default();
    let mut sign = Tally::default();
    for (c, protocol) in coeffs.iter().zip(instance.scenario.protocols()) {
        if *protocol != Protocol::Af {
            continue;
        }
        let rho: Vec<f64> = random_ratios(coeffs.len(), rng);
        let w = c.w_of(&rho);
        let root = best_response_af(c, w)?;
        let (cc, d) = c_d_of(c, w);
        let grid: Vec<f64> = (0..=k).map(|j| j as f64 / k as f64).collect();
        let u: Vec<f64> = grid.iter().map(|r| c.utility(Protocol::Af, *r, w)).collect();

        // Largest rise seen after the first fall.
        let mut falling = false;
        let mut rebound = 0.0f64;
        for pair in u.windows(2) {
            let diff = pair[1] - pair[0];
            if diff < 0.0 {
                falling = true;
            } else if falling && diff > 0.0 {
                rebound = rebound.max(diff);
            }
        }
        unimodal.record(rebound, 0.0);

        for j in 0..k {
            let (a, b) = (grid[j], grid[j + 1]);
            if b < root - KAPPA_EXCLUSION || a > root + KAPPA_EXCLUSION {
                let expected = kappa(a, cc, d).signum();
                let observed = (u[j + 1] - u[j]).signum();
                sign.record(if expected == observed { 0.0 } else { 1.0 }, 0.0);
            }
        }
    }
    Ok((unimodal, sign))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryOptions {
    pub seed: u64,
    pub instances: usize,
    pub spec: InstanceSpec,
    /// Random starts per instance for the uniqueness check.
    pub starts: usize,
    /// Axiom triples per instance.
    pub axiom_triples: usize,
    pub solver: SolverOptions<f64>,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            instances: 100,
            spec: InstanceSpec::default(),
            starts: 100,
            axiom_triples: 100,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub tally: Tally,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryReport {
    pub seed: u64,
    pub instances: usize,
    pub checks: Vec<CheckResult>,
}

impl BatteryReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.tally.passed())
    }

    pub fn check(&self, name: &str) -> Option<&Tally> {
        self.checks.iter().find(|c| c.name == name).map(|c| &c.tally)
    }
}

impl fmt::Display for BatteryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed {}, {} instances", self.seed, self.instances)?;
        writeln!(f, "{:<22} {:>9} {:>11} {:>12}  result", "check", "cases", "violations", "worst")?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<22} {:>9} {:>11} {:>12.3e}  {}",
                c.name,
                c.tally.cases,
                c.tally.violations,
                c.tally.worst,
                if c.tally.passed() { "PASS" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

const CHECK_NAMES: [&str; 6] =
    ["best_response_oracle", "df_equality", "standard_axioms", "uniqueness", "unimodality", "kappa_sign"];

fn battery_instance(options: &BatteryOptions, index: usize) -> Result<[Tally; 6]> {
    let mut rng = trial_rng(options.seed, index as u64);
    let instance = random_instance(&options.spec, &mut rng)?;
    let (oracle, equality) = check_best_responses(&instance, &mut rng)?;
    let axioms = check_axioms(&instance, options.axiom_triples, &mut rng)?;
    let unique = check_uniqueness(&instance, options.starts, &options.solver, &mut rng)?;
    let (unimodal, sign) = check_unimodality(&instance, &mut rng)?;
    Ok([oracle, equality, axioms, unique, unimodal, sign])
}

/// Runs every check on `options.instances` random instances. With zero
/// instances every check passes vacuously.
pub fn run_battery(options: &BatteryOptions) -> Result<BatteryReport> {
    options.solver.validate()?;
    let per_instance: Vec<[Tally; 6]> =
        (0..options.instances).into_par_iter().map(|k| battery_instance(options, k)).collect::<Result<_>>()?;
    let mut totals = [Tally::default(); 6];
    for tallies in &per_instance {
        for (t, x) in totals.iter_mut().zip(tallies) {
            t.merge(x);
        }
    }
    Ok(BatteryReport {
        seed: options.seed,
        instances: options.instances,
        checks: CHECK_NAMES.iter().zip(totals).map(|(name, tally)| CheckResult { name, tally }).collect(),
    })
}
