//! Simultaneous best-response iteration.

use rand::Rng;
use serde::Serialize;

use crate::channel::{trial_rng, ChannelRealization, NetworkScenario, Protocol};
use crate::error::{Error, Result};
use crate::metrics::{coefficients, link_rates_with, LinkCoefficients, SplitProfile};
use crate::scalar::Scalar;

use super::best_response::best_response_map;

/// Floor on the denominator of the relative step criterion.
pub const STEP_DENOMINATOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialProfile<T> {
    Explicit(Vec<T>),
    /// Every ratio uniform on `[0, 1]`, drawn from a generator seeded here.
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions<T> {
    /// Per-link relative step threshold.
    pub zeta: T,
    /// Bound on `max_i |B_i(rho) - rho_i|` for a result to count as converged.
    pub fixed_point_tolerance: T,
    pub max_iterations: usize,
    pub initial_profile: InitialProfile<T>,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            zeta: T::lit(1e-8),
            fixed_point_tolerance: T::lit(1e-9),
            max_iterations: 10_000,
            initial_profile: InitialProfile::Random { seed: 0 },
        }
    }
}

impl<T: Scalar> SolverOptions<T> {
    pub fn with_initial(mut self, initial: InitialProfile<T>) -> Self {
        self.initial_profile = initial;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > T::zero()) {
            return Err(Error::config(format!("zeta must be positive, got {}", self.zeta)));
        }
        if !(self.fixed_point_tolerance > T::zero()) {
            return Err(Error::config("fixed_point_tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::config("max_iterations must be at least 1"));
        }
        Ok(())
    }

    fn initial(&self, n: usize) -> Result<Vec<T>> {
        match &self.initial_profile {
            InitialProfile::Explicit(v) => {
                if v.len() != n {
                    return Err(Error::config(format!("initial profile has {} entries for {n} links", v.len())));
                }
                Ok(SplitProfile::new(v.clone())?.into_inner())
            }
            InitialProfile::Random { seed } => {
                let mut rng = trial_rng(*seed, 0);
                Ok(random_ratios(n, &mut rng))
            }
        }
    }
}

/// `n` ratios drawn independently and uniformly from `[0, 1]`.
pub fn random_ratios<T: Scalar, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<T> {
    (0..n).map(|_| T::lit(rng.random::<f64>())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult<T> {
    pub profile: SplitProfile<T>,
    /// Number of best-response updates applied to reach `profile`.
    pub iterations: usize,
    pub converged: bool,
    /// `max_i |B_i(profile) - profile_i|`.
    pub residual: T,
    pub rates: Vec<T>,
    pub sum_rate: T,
}

/// Runs the simultaneous best-response iteration on one channel realization.
pub fn solve<T: Scalar>(
    scenario: &NetworkScenario<T>,
    channels: &ChannelRealization<T>,
    options: &SolverOptions<T>,
) -> Result<EquilibriumResult<T>> {
    let coeffs = coefficients(scenario, channels)?;
    solve_with(&coeffs, scenario.protocols(), options)
}

/// [`solve`] on precomputed coefficients.
///
/// Every link updates against the same frozen profile. The iteration stops
/// once every link's relative step
/// `|rho_i(t+1) - rho_i(t)| / max(rho_i(t+1), 1e-12)` is at most `zeta` and
/// the fixed-point residual of the new profile is within tolerance, or when
/// `max_iterations` updates have been applied.
pub fn solve_with<T: Scalar>(
    coeffs: &[LinkCoefficients<T>],
    protocols: &[Protocol],
    options: &SolverOptions<T>,
) -> Result<EquilibriumResult<T>> {
    options.validate()?;
    let n = coeffs.len();
    if protocols.len() != n {
        return Err(Error::config(format!("{} protocols for {n} links", protocols.len())));
    }
    let floor = T::lit(STEP_DENOMINATOR_FLOOR);
    let mut current = options.initial(n)?;
    let mut next = best_response_map(coeffs, protocols, &current)?;
    let mut iterations = 1;
    let (profile, residual) = loop {
        let small_step = current
            .iter()
            .zip(&next)
            .all(|(old, new)| (*new - *old).abs() / new.max(floor) <= options.zeta);
        current = next;
        next = best_response_map(coeffs, protocols, &current)?;
        let residual = max_abs_diff(&current, &next);
        if (small_step && residual <= options.fixed_point_tolerance) || iterations >= options.max_iterations {
            break (current, residual);
        }
        iterations += 1;
    };
    let rates = link_rates_with(coeffs, protocols, &profile);
    let sum_rate = rates.iter().fold(T::zero(), |a, b| a + *b);
    Ok(EquilibriumResult {
        profile: SplitProfile::new(profile)?,
        iterations,
        converged: residual <= options.fixed_point_tolerance,
        residual,
        rates,
        sum_rate,
    })
}

/// `max_i |B_i(rho) - rho_i|`.
pub fn fixed_point_residual<T: Scalar>(
    coeffs: &[LinkCoefficients<T>],
    protocols: &[Protocol],
    rho: &[T],
) -> Result<T> {
    Ok(max_abs_diff(rho, &best_response_map(coeffs, protocols, rho)?))
}

fn max_abs_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::fixture_two_link_with;
    use crate::game::best_response::best_response;
    use crate::metrics::coefficients;

    fn opts(initial: Vec<f64>) -> SolverOptions<f64> {
        SolverOptions::default().with_initial(InitialProfile::Explicit(initial))
    }

    #[test]
    fn fixed_point_start_takes_one_update() {
        let (s, c) = fixture_two_link_with::<f64>([Protocol::Af, Protocol::Af]);
        let ne = solve(&s, &c, &opts(vec![0.5, 0.5])).unwrap();
        assert!(ne.converged);
        let again = solve(&s, &c, &opts(ne.profile.as_slice().to_vec())).unwrap();
        assert_eq!(again.iterations, 1);
        assert!(again.residual <= 1e-9);
    }

    /// Best-response curve `rho_1(rho_2)` on a fine grid in `rho_2`, crossed
    /// with the curve `rho_2(rho_1)`: the crossing of the two curves.
    fn curve_intersection(coeffs: &[crate::metrics::LinkCoefficients<f64>], protocols: &[Protocol]) -> [f64; 2] {
        let mut best = ([0.0, 0.0], f64::INFINITY);
        let k = 100_000;
        for i in 0..=k {
            let r2 = i as f64 / k as f64;
            let r1 = best_response(&coeffs[0], protocols[0], &[0.0, r2]).unwrap();
            let r2b = best_response(&coeffs[1], protocols[1], &[r1, 0.0]).unwrap();
            let gap = (r2b - r2).abs();
            if gap < best.1 {
                best = ([r1, r2], gap);
            }
        }
        best.0
    }

    #[test]
    fn fixture_equilibria_are_unique() {
        for protocols in [[Protocol::Af, Protocol::Af], [Protocol::Df, Protocol::Df], [Protocol::Df, Protocol::Af]] {
            let (s, c) = fixture_two_link_with::<f64>(protocols);
            let a = solve(&s, &c, &SolverOptions::default().with_initial(InitialProfile::Random { seed: 1 })).unwrap();
            let b = solve(&s, &c, &SolverOptions::default().with_initial(InitialProfile::Random { seed: 2 })).unwrap();
            assert!(a.converged && b.converged);
            for i in 0..2 {
                assert!((a.profile[i] - b.profile[i]).abs() <= 1e-6);
            }
            let k = coefficients(&s, &c).unwrap();
            let cross = curve_intersection(&k, &protocols);
            for i in 0..2 {
                assert!((a.profile[i] - cross[i]).abs() <= 1e-4, "{protocols:?}: {:?} vs {cross:?}", a.profile);
            }
        }
    }

    #[test]
    fn hybrid_fixture_multi_start() {
        let (s, c) = fixture_two_link_with::<f64>([Protocol::Df, Protocol::Af]);
        let reference = solve(&s, &c, &opts(vec![0.0, 0.0])).unwrap();
        for start in [[1.0, 1.0], [0.0, 1.0], [0.9, 0.05], [0.33, 0.77]] {
            let r = solve(&s, &c, &opts(start.to_vec())).unwrap();
            assert!(r.converged);
            for i in 0..2 {
                assert!((r.profile[i] - reference.profile[i]).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn non_convergence_is_reported_not_raised() {
        let (s, c) = fixture_two_link_with::<f64>([Protocol::Af, Protocol::Af]);
        let mut o = opts(vec![0.0, 0.0]);
        o.max_iterations = 1;
        let r = solve(&s, &c, &o).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(!r.converged);
        assert!(r.residual > 1e-9);
    }

    #[test]
    fn rejects_bad_options() {
        let (s, c) = fixture_two_link_with::<f64>([Protocol::Af, Protocol::Af]);
        let mut o = opts(vec![0.1, 0.2]);
        o.zeta = 0.0;
        assert!(solve(&s, &c, &o).is_err());
        let mut o = opts(vec![0.1, 0.2]);
        o.max_iterations = 0;
        assert!(solve(&s, &c, &o).is_err());
        assert!(solve(&s, &c, &opts(vec![0.1])).is_err());
        assert!(solve(&s, &c, &opts(vec![0.1, 1.2])).is_err());
    }

    #[test]
    fn result_is_consistent() {
        let (s, c) = fixture_two_link_with::<f64>([Protocol::Df, Protocol::Df]);
        let r = solve(&s, &c, &SolverOptions::default()).unwrap();
        let k = coefficients(&s, &c).unwrap();
        assert!(fixed_point_residual(&k, s.protocols(), r.profile.as_slice()).unwrap() <= 1e-9);
        assert!((r.rates.iter().sum::<f64>() - r.sum_rate).abs() <= 1e-12);
        assert!(r.profile.as_slice().iter().all(|v| *v > 0.0 && *v < 1.0));
    }

    #[test]
    fn f32_solver_runs() {
        let (s, c) = fixture_two_link_with::<f32>([Protocol::Af, Protocol::Df]);
        let o = SolverOptions { zeta: 1e-5f32, fixed_point_tolerance: 1e-5, ..SolverOptions::default() };
        let r = solve(&s, &c, &o).unwrap();
        assert!(r.converged);
        let (s64, c64) = fixture_two_link_with::<f64>([Protocol::Af, Protocol::Df]);
        let r64 = solve(&s64, &c64, &SolverOptions::default()).unwrap();
        for i in 0..2 {
            assert!((r.profile[i] as f64 - r64.profile[i]).abs() < 1e-4);
        }
    }
}
