//! Empirical checks that the best-response map is a standard function:
//! positive, monotone and scalable.

use serde::Serialize;

use crate::channel::{ChannelRealization, NetworkScenario};
use crate::error::{Error, Result};
use crate::metrics::coefficients;
use crate::scalar::Scalar;

use super::best_response::best_response_map;

/// Monotonicity comparisons allow this many ulps of rounding slack.
const MONOTONE_ULPS: f64 = 8.0;

/// One test point. `rho >= rho_prime` componentwise is expected for the
/// monotonicity check; pairs that are not ordered are skipped for it.
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomTrial<T> {
    pub rho: Vec<T>,
    pub rho_prime: Vec<T>,
    pub alpha: T,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub trials: usize,
    pub positivity_violations: usize,
    pub monotonicity_checked: usize,
    pub monotonicity_violations: usize,
    pub scalability_violations: usize,
}

impl AxiomReport {
    pub fn violations(&self) -> usize {
        self.positivity_violations + self.monotonicity_violations + self.scalability_violations
    }

    pub fn merge(&mut self, other: &AxiomReport) {
        self.trials += other.trials;
        self.positivity_violations += other.positivity_violations;
        self.monotonicity_checked += other.monotonicity_checked;
        self.monotonicity_violations += other.monotonicity_violations;
        self.scalability_violations += other.scalability_violations;
    }
}

/// Counts violations of `B(rho) > 0`, `rho >= rho' => B(rho) >= B(rho')` and
/// `alpha B(rho) > B(alpha rho)` over `trials`.
///
/// The map is evaluated on arbitrary non-negative vectors, so `alpha rho` may
/// leave the unit cube.
pub fn check_standard_axioms<T: Scalar>(
    scenario: &NetworkScenario<T>,
    channels: &ChannelRealization<T>,
    trials: &[AxiomTrial<T>],
) -> Result<AxiomReport> {
    let coeffs = coefficients(scenario, channels)?;
    let protocols = scenario.protocols();
    let n = scenario.n();
    let slack = T::lit(MONOTONE_ULPS) * T::epsilon();
    let mut report = AxiomReport { trials: trials.len(), ..AxiomReport::default() };
    for t in trials {
        if t.rho.len() != n || t.rho_prime.len() != n {
            return Err(Error::config(format!("axiom trial profiles must have {n} entries")));
        }
        if t.rho.iter().chain(&t.rho_prime).any(|v| !(*v >= T::zero())) || !(t.alpha > T::one()) {
            return Err(Error::config("axiom trials need non-negative profiles and alpha > 1"));
        }
        let b = best_response_map(&coeffs, protocols, &t.rho)?;
        let b_prime = best_response_map(&coeffs, protocols, &t.rho_prime)?;
        if b.iter().chain(&b_prime).any(|v| !(*v > T::zero())) {
            report.positivity_violations += 1;
        }
        if t.rho.iter().zip(&t.rho_prime).all(|(a, b)| a >= b) {
            report.monotonicity_checked += 1;
            if b.iter().zip(&b_prime).any(|(hi, lo)| *hi < *lo - slack * lo.abs()) {
                report.monotonicity_violations += 1;
            }
        }
        let scaled: Vec<T> = t.rho.iter().map(|r| *r * t.alpha).collect();
        let b_scaled = best_response_map(&coeffs, protocols, &scaled)?;
        if b.iter().zip(&b_scaled).any(|(v, s)| !(t.alpha * *v > *s)) {
            report.scalability_violations += 1;
        }
    }
    Ok(report)
}
