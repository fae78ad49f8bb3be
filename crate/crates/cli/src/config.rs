//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//!
//! [scenario]
//! links = 2
//! power_db = 15.0          # or powers_db = [..], one per link
//! protocol = "DF"          # or protocols = ["DF", "AF"]
//! d_max = 1.0
//! relay_fraction = 0.5     # or relay_fractions = [..]
//! tau = 5.0
//! eta = 0.5
//! sigma2 = 1.0
//!
//! [sweep]
//! parameter = "inter_link_distance"   # link_count, power_db
//! values = [1, 2, 3, 4, 5]
//! trials = 2000
//! schemes = ["game", "random", "centralized"]
//!
//! [solver]
//! zeta = 1e-8
//! fixed_point_tolerance = 1e-9
//! max_iterations = 10000
//! ```
//!
//! `fixture = "two-link"` in `[scenario]` selects the built-in two-link
//! instance with fixed gains; only `protocol`/`protocols` may accompany it.

use serde::Deserialize;
use swipt_ne::channel::{fixture_two_link_with, sample_channels, trial_rng};
use swipt_ne::game::random_ratios;
use swipt_ne::experiments::{ScenarioTemplate, Scheme, SweepConfig, SweepParameter};
use swipt_ne::{Channels, InitialProfile, Options, Protocol, Scenario};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    #[serde(default)]
    pub scenario: ScenarioSection,
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub solver: SolverSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub fixture: Option<String>,
    pub links: Option<usize>,
    pub power_db: Option<f64>,
    pub powers_db: Option<Vec<f64>>,
    pub protocol: Option<String>,
    pub protocols: Option<Vec<String>>,
    pub d_max: Option<f64>,
    pub relay_fraction: Option<f64>,
    pub relay_fractions: Option<Vec<f64>>,
    pub tau: Option<f64>,
    pub eta: Option<f64>,
    pub sigma2: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: String,
    pub values: Vec<f64>,
    pub trials: Option<usize>,
    pub schemes: Option<Vec<String>>,
    pub centralized_resolution: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub zeta: Option<f64>,
    pub fixed_point_tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub initial_profile: Option<Vec<f64>>,
}

fn bad(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

/// `scalar` or `list` (not both), defaulting to `default`.
fn one_or_many<T: Clone>(
    scalar_name: &str,
    scalar: &Option<T>,
    list_name: &str,
    list: &Option<Vec<T>>,
    default: Vec<T>,
) -> Result<Vec<T>, CliError> {
    match (scalar, list) {
        (Some(_), Some(_)) => Err(bad("scenario", format!("set either {scalar_name} or {list_name}, not both"))),
        (Some(v), None) => Ok(vec![v.clone()]),
        (None, Some(v)) if v.is_empty() => Err(bad(&format!("scenario.{list_name}"), "must not be empty")),
        (None, Some(v)) => Ok(v.clone()),
        (None, None) => Ok(default),
    }
}

fn check_each(field: &str, values: &[f64], ok: impl Fn(f64) -> bool, expect: &str) -> Result<(), CliError> {
    for (k, v) in values.iter().enumerate() {
        if !ok(*v) {
            let name = if values.len() > 1 { format!("{field}[{k}]") } else { field.to_string() };
            return Err(bad(&name, format!("must be {expect} (got {v})")));
        }
    }
    Ok(())
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    fn is_fixture(&self) -> Result<bool, CliError> {
        match self.scenario.fixture.as_deref() {
            None => Ok(false),
            Some("two-link") => {
                let s = &self.scenario;
                let extra = [
                    ("links", s.links.is_some()),
                    ("power_db", s.power_db.is_some()),
                    ("powers_db", s.powers_db.is_some()),
                    ("d_max", s.d_max.is_some()),
                    ("relay_fraction", s.relay_fraction.is_some()),
                    ("relay_fractions", s.relay_fractions.is_some()),
                    ("tau", s.tau.is_some()),
                    ("eta", s.eta.is_some()),
                    ("sigma2", s.sigma2.is_some()),
                ];
                if let Some((name, _)) = extra.iter().find(|(_, set)| *set) {
                    return Err(bad("scenario.fixture", format!("cannot be combined with scenario.{name}")));
                }
                Ok(true)
            }
            Some(other) => Err(bad("scenario.fixture", format!("unknown fixture `{other}` (expected \"two-link\")"))),
        }
    }

    fn protocols(&self) -> Result<Vec<Protocol>, CliError> {
        let s = &self.scenario;
        let names = one_or_many("protocol", &s.protocol, "protocols", &s.protocols, vec!["AF".to_string()])?;
        let field = if s.protocols.is_some() { "scenario.protocols" } else { "scenario.protocol" };
        names
            .iter()
            .enumerate()
            .map(|(k, p)| {
                p.parse().map_err(|_| {
                    let name = if names.len() > 1 { format!("{field}[{k}]") } else { field.to_string() };
                    bad(&name, format!("unknown protocol `{p}` (expected AF or DF)"))
                })
            })
            .collect()
    }

    /// The scenario family described by `[scenario]`.
    pub fn template(&self) -> Result<ScenarioTemplate, CliError> {
        if self.is_fixture()? {
            return Err(bad("scenario.fixture", "a fixed-gain fixture cannot be used as a sweep template"));
        }
        let s = &self.scenario;
        let defaults = ScenarioTemplate::default();
        let links = s.links.unwrap_or(defaults.links);
        if links == 0 {
            return Err(bad("scenario.links", "must be at least 1"));
        }
        let powers_db = one_or_many("power_db", &s.power_db, "powers_db", &s.powers_db, defaults.powers_db)?;
        let powers_field = if s.powers_db.is_some() { "scenario.powers_db" } else { "scenario.power_db" };
        check_each(powers_field, &powers_db, f64::is_finite, "a finite number of dB")?;
        let relay_fractions = one_or_many(
            "relay_fraction",
            &s.relay_fraction,
            "relay_fractions",
            &s.relay_fractions,
            defaults.relay_fractions,
        )?;
        let fractions_field =
            if s.relay_fractions.is_some() { "scenario.relay_fractions" } else { "scenario.relay_fraction" };
        check_each(fractions_field, &relay_fractions, |v| v > 0.0 && v < 1.0, "strictly between 0 and 1")?;
        let protocols = self.protocols()?;
        for (field, len) in [
            (powers_field, powers_db.len()),
            (fractions_field, relay_fractions.len()),
            (if s.protocols.is_some() { "scenario.protocols" } else { "scenario.protocol" }, protocols.len()),
        ] {
            if len != 1 && len != links {
                return Err(bad(field, format!("expected 1 or {links} entries (scenario.links), got {len}")));
            }
        }
        let d_max = s.d_max.unwrap_or(defaults.d_max);
        check_each("scenario.d_max", &[d_max], |v| v.is_finite() && v >= 0.0, "a non-negative number")?;
        let tau = s.tau.unwrap_or(defaults.tau);
        check_each("scenario.tau", &[tau], |v| (2.0..=5.0).contains(&v), "in [2, 5]")?;
        let eta = s.eta.unwrap_or(defaults.eta);
        check_each("scenario.eta", &[eta], |v| v > 0.0 && v <= 1.0, "in (0, 1]")?;
        let sigma2 = s.sigma2.unwrap_or(defaults.sigma2);
        check_each("scenario.sigma2", &[sigma2], |v| v.is_finite() && v > 0.0, "positive")?;
        let template = ScenarioTemplate { links, powers_db, protocols, d_max, relay_fractions, tau, eta, sigma2 };
        template.build().map_err(|e| bad("scenario", e))?;
        Ok(template)
    }

    /// The single network of a `solve` run and its channel realization,
    /// drawn from `seed` unless the scenario is a fixture.
    pub fn instance(&self, seed: u64) -> Result<(Scenario, Channels), CliError> {
        if self.is_fixture()? {
            let p = self.protocols()?;
            let pair = match p.as_slice() {
                [one] => [*one, *one],
                [a, b] => [*a, *b],
                _ => return Err(bad("scenario.protocols", format!("the two-link fixture needs 1 or 2 entries, got {}", p.len()))),
            };
            return Ok(fixture_two_link_with(pair));
        }
        let scenario = self.template()?.build().map_err(|e| bad("scenario", e))?;
        let channels = sample_channels(&scenario, seed);
        Ok((scenario, channels))
    }

    /// Solver options from `[solver]`. The starting profile is the configured
    /// one, or otherwise drawn from stream 1 of `seed` (stream 0 holds the
    /// channels).
    pub fn solver(&self, links: usize, seed: u64) -> Result<Options, CliError> {
        let options = self.tolerances()?;
        let initial_profile = match &self.solver.initial_profile {
            Some(v) => {
                if v.len() != links {
                    return Err(bad("solver.initial_profile", format!("expected {links} entries, got {}", v.len())));
                }
                check_each("solver.initial_profile", v, |x| (0.0..=1.0).contains(&x), "in [0, 1]")?;
                v.clone()
            }
            None => random_ratios(links, &mut trial_rng(seed, 1)),
        };
        Ok(options.with_initial(InitialProfile::Explicit(initial_profile)))
    }

    fn tolerances(&self) -> Result<Options, CliError> {
        let s = &self.solver;
        let d = Options::default();
        let zeta = s.zeta.unwrap_or(d.zeta);
        check_each("solver.zeta", &[zeta], |v| v.is_finite() && v > 0.0, "positive")?;
        let tol = s.fixed_point_tolerance.unwrap_or(d.fixed_point_tolerance);
        check_each("solver.fixed_point_tolerance", &[tol], |v| v.is_finite() && v > 0.0, "positive")?;
        let max_iterations = s.max_iterations.unwrap_or(d.max_iterations);
        if max_iterations == 0 {
            return Err(bad("solver.max_iterations", "must be at least 1"));
        }
        Ok(Options { zeta, fixed_point_tolerance: tol, max_iterations, ..d })
    }

    /// The sweep described by `[scenario]`, `[sweep]` and `[solver]`, with
    /// an optional trial-count override.
    pub fn sweep(&self, seed: u64, trials: Option<usize>) -> Result<SweepConfig, CliError> {
        let section = self.sweep.as_ref().ok_or_else(|| bad("sweep", "section is required for the sweep command"))?;
        if self.solver.initial_profile.is_some() {
            return Err(bad("solver.initial_profile", "not used by sweeps (starts are drawn per trial)"));
        }
        let template = self.template()?;
        let parameter: SweepParameter = section.parameter.parse().map_err(|e| bad("sweep.parameter", e))?;
        if section.values.is_empty() {
            return Err(bad("sweep.values", "must not be empty"));
        }
        check_each("sweep.values", &section.values, f64::is_finite, "finite")?;
        let trials = trials.or(section.trials).unwrap_or(swipt_ne::experiments::DEFAULT_TRIALS);
        if trials == 0 {
            return Err(bad("sweep.trials", "must be at least 1"));
        }
        let schemes = match &section.schemes {
            None => vec![Scheme::Game, Scheme::Random],
            Some(list) if list.is_empty() => return Err(bad("sweep.schemes", "must not be empty")),
            Some(list) => list
                .iter()
                .enumerate()
                .map(|(k, s)| s.parse().map_err(|e| bad(&format!("sweep.schemes[{k}]"), e)))
                .collect::<Result<_, _>>()?,
        };
        let mut config = SweepConfig::new(template, parameter, section.values.clone())
            .with_trials(trials)
            .with_schemes(&schemes)
            .with_seed(seed);
        if let Some(r) = section.centralized_resolution {
            check_each("sweep.centralized_resolution", &[r], |v| v > 0.0 && v <= 0.5, "in (0, 0.5]")?;
            config.centralized_resolution = r;
        }
        config.solver = self.tolerances()?;
        config.validate().map_err(|e| bad("sweep", e))?;
        Ok(config)
    }
}
