//! Reference schemes: random splitting, exhaustive grid search of the
//! sum-rate, and grid-search best responses used as oracles for the closed
//! forms.

use rand::Rng;
use serde::Serialize;

use crate::channel::{trial_rng, ChannelRealization, NetworkScenario, Protocol};
use crate::error::{Error, Result};
use crate::game::{df_equal_hops, random_ratios};
use crate::metrics::{coefficients, rate_from_sinr, sinr_af, sinr_df, LinkCoefficients, SplitProfile};
use crate::scalar::Scalar;

/// Largest network the centralized search accepts.
pub const MAX_CENTRALIZED_LINKS: usize = 3;

/// Coarse pass used before refinement for three-link searches.
pub const THREE_LINK_COARSE_RESOLUTION: f64 = 1e-2;

/// Refinement stops once the local grid step drops below this.
const REFINE_FLOOR: f64 = 1e-7;

/// Points per axis side in a refinement window (window is +-1 previous step).
const REFINE_SUBDIVISIONS: usize = 10;
const MAX_RECENTRES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    /// Largest allowed spacing between neighbouring points.
    pub resolution: T,
    pub include_endpoints: bool,
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(resolution: T, include_endpoints: bool) -> Result<Self> {
        if !(resolution > T::zero() && resolution <= T::lit(0.5)) {
            return Err(Error::config(format!("grid resolution must lie in (0, 0.5], got {resolution}")));
        }
        Ok(Self { resolution, include_endpoints })
    }

    /// 1e-4 spacing with endpoints, for one-dimensional best-response oracles.
    pub fn oracle() -> Self {
        Self { resolution: T::lit(1e-4), include_endpoints: true }
    }

    /// 1e-3 spacing with endpoints, for the centralized search.
    pub fn centralized() -> Self {
        Self { resolution: T::lit(1e-3), include_endpoints: true }
    }

    /// Number of equal intervals covering `[0, 1]` at no more than `resolution`.
    fn intervals(&self) -> usize {
        (T::one() / self.resolution - T::lit(1e-9)).ceil().as_f64().max(1.0) as usize
    }

    /// Ascending grid points `i / k` in `[0, 1]`.
    pub fn points(&self) -> Vec<T> {
        let k = self.intervals();
        let range = if self.include_endpoints { 0..=k } else { 1..=k - 1 };
        range.map(|i| T::lit(i as f64 / k as f64)).collect()
    }
}

/// Every ratio independently uniform on `[0, 1]`.
pub fn random_profile<T: Scalar>(n: usize, seed: u64) -> Result<SplitProfile<T>> {
    random_profile_with(n, &mut trial_rng(seed, 0))
}

pub fn random_profile_with<T: Scalar, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<SplitProfile<T>> {
    if n == 0 {
        return Err(Error::config("profile needs at least one link"));
    }
    SplitProfile::new(random_ratios(n, rng))
}

/// Exhaustive search of link `i`'s own rate over `grid` with the other
/// entries of `rho` held fixed. Ties go to the smaller ratio.
pub fn grid_best_response<T: Scalar>(
    scenario: &NetworkScenario<T>,
    channels: &ChannelRealization<T>,
    i: usize,
    rho: &[T],
    grid: &GridSpec<T>,
) -> Result<(T, T)> {
    let coeffs = coefficients(scenario, channels)?;
    if i >= scenario.n() || rho.len() != scenario.n() {
        return Err(Error::config(format!("link {i} / profile length {} out of range", rho.len())));
    }
    Ok(grid_best_response_with(&coeffs[i], scenario.protocols()[i], coeffs[i].w_of(rho), grid))
}

/// [`grid_best_response`] for one link's coefficients and fixed INR `w`.
pub fn grid_best_response_with<T: Scalar>(
    coeffs: &LinkCoefficients<T>,
    protocol: Protocol,
    w: T,
    grid: &GridSpec<T>,
) -> (T, T) {
    let mut best = (T::zero(), T::neg_infinity());
    for r in grid.points() {
        let u = coeffs.utility(protocol, r, w);
        if u > best.1 {
            best = (r, u);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralizedOptimum<T> {
    pub profile: SplitProfile<T>,
    pub sum_rate: T,
}

/// Approximate maximiser of the network sum-rate.
///
/// With DF links the sum-rate is only piecewise smooth: it has a ridge where
/// a DF link's two hop SINRs are equal, and a plain grid locates a ridge
/// maximum only to first order in its step. The search therefore runs once
/// per subset of DF links held on their ridges, in ascending bitmask order
/// of the DF links. Held links sit at the ratio equalising their hops given
/// everything else. The other links are searched on a product grid at
/// `grid.resolution` (`1e-2` when three links are free), then polished by
/// local grids spanning +-1 step of the previous level at ten times finer
/// spacing, each moved to its best point until that stops improving, down to
/// a `1e-7` step. The best profile over all subsets is returned; ties go to
/// the earlier subset and then to the lexicographically smaller grid point.
pub fn centralized_optimum<T: Scalar>(
    scenario: &NetworkScenario<T>,
    channels: &ChannelRealization<T>,
    grid: &GridSpec<T>,
) -> Result<CentralizedOptimum<T>> {
    let coeffs = coefficients(scenario, channels)?;
    centralized_optimum_with(&coeffs, scenario.protocols(), grid)
}

pub fn centralized_optimum_with<T: Scalar>(
    coeffs: &[LinkCoefficients<T>],
    protocols: &[Protocol],
    grid: &GridSpec<T>,
) -> Result<CentralizedOptimum<T>> {
    let n = coeffs.len();
    if n > MAX_CENTRALIZED_LINKS {
        return Err(Error::Capability(format!(
            "centralized grid search supports at most {MAX_CENTRALIZED_LINKS} links (got {n}); \
             use the game solution for larger networks"
        )));
    }
    if n == 0 || protocols.len() != n {
        return Err(Error::config(format!("{} protocols for {n} links", protocols.len())));
    }
    if let Some(c) = coeffs.iter().find(|c| ![c.x, c.y, c.z].iter().chain(&c.w_weights).all(|v| v.is_finite())) {
        return Err(Error::Numeric(format!("non-finite coefficients for link {}", c.link)));
    }
    let df: Vec<usize> = (0..n).filter(|i| protocols[*i] == Protocol::Df).collect();
    let mut best: Option<(Vec<T>, T)> = None;
    for mask in 0..1usize << df.len() {
        let ridge: Vec<usize> = df.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, i)| *i).collect();
        let free: Vec<usize> = (0..n).filter(|i| !ridge.contains(i)).collect();
        let (rho, obj) = search_piece(coeffs, protocols, &free, &ridge, grid);
        if best.as_ref().is_none_or(|b| obj > b.1) {
            best = Some((rho, obj));
        }
    }
    let (rho, obj) = best.expect("at least the empty subset is searched");
    Ok(CentralizedOptimum { profile: SplitProfile::new(rho)?, sum_rate: rate_from_sinr(obj - T::one()) })
}

/// Fixed-point iterations allowed when placing several links on their ridges.
const RIDGE_MAX_ITERATIONS: usize = 10_000;

/// Sets every link in `ridge` to its hop-equalising ratio given the rest of
/// `rho`. Several ridge links are solved jointly by Gauss-Seidel sweeps from
/// zero, which rise monotonically to the joint point.
fn place_on_ridge<T: Scalar>(coeffs: &[LinkCoefficients<T>], ridge: &[usize], rho: &mut [T]) {
    for i in ridge {
        rho[*i] = T::zero();
    }
    let tol = T::lit(4.0) * T::epsilon();
    for _ in 0..RIDGE_MAX_ITERATIONS {
        let mut delta = T::zero();
        for i in ridge {
            let c = &coeffs[*i];
            let next = df_equal_hops(c, c.w_of(rho));
            delta = delta.max((next - rho[*i]).abs());
            rho[*i] = next;
        }
        if ridge.len() < 2 || delta <= tol {
            return;
        }
    }
}

/// Best point of one piece as `(profile, prod_i (1 + gamma_i))`.
fn search_piece<T: Scalar>(
    coeffs: &[LinkCoefficients<T>],
    protocols: &[Protocol],
    free: &[usize],
    ridge: &[usize],
    grid: &GridSpec<T>,
) -> (Vec<T>, T) {
    let mut rho = vec![T::zero(); coeffs.len()];
    let mut eval = |x: &[T]| {
        for (k, i) in free.iter().enumerate() {
            rho[*i] = x[k];
        }
        place_on_ridge(coeffs, ridge, &mut rho);
        sinr_product(coeffs, protocols, &rho)
    };
    let coarse = if free.len() == MAX_CENTRALIZED_LINKS {
        GridSpec { resolution: grid.resolution.max(T::lit(THREE_LINK_COARSE_RESOLUTION)), ..*grid }
    } else {
        *grid
    };
    let axis = coarse.points();
    let axes: Vec<&[T]> = vec![&axis; free.len()];
    let (mut best, mut best_obj) = search_box(&axes, &mut eval);

    let mut step = T::one() / T::lit(coarse.intervals() as f64);
    let floor = T::lit(REFINE_FLOOR);
    while !free.is_empty() && step > floor {
        let fine = step / T::lit(REFINE_SUBDIVISIONS as f64);
        // Re-centre until the centre wins, so the search can follow a
        // curved optimum that leaves the first window.
        for _ in 0..MAX_RECENTRES {
            let local: Vec<Vec<T>> = best
                .iter()
                .map(|c| {
                    (0..=2 * REFINE_SUBDIVISIONS)
                        .map(|k| *c - step + fine * T::lit(k as f64))
                        .filter(|v| *v >= T::zero() && *v <= T::one())
                        .collect()
                })
                .collect();
            let axes: Vec<&[T]> = local.iter().map(Vec::as_slice).collect();
            let (cand, obj) = search_box(&axes, &mut eval);
            if obj > best_obj {
                best = cand;
                best_obj = obj;
            } else {
                break;
            }
        }
        step = fine;
    }
    let mut profile = vec![T::zero(); coeffs.len()];
    for (k, i) in free.iter().enumerate() {
        profile[*i] = best[k];
    }
    place_on_ridge(coeffs, ridge, &mut profile);
    (profile, best_obj)
}

/// `prod_i (1 + gamma_i)`; the sum-rate is `log2` of this over two, so the
/// product orders profiles exactly as the sum-rate does.
fn sinr_product<T: Scalar>(coeffs: &[LinkCoefficients<T>], protocols: &[Protocol], rho: &[T]) -> T {
    coeffs.iter().zip(protocols).fold(T::one(), |acc, (c, p)| {
        let w = c.w_of(rho);
        let g = match p {
            Protocol::Af => sinr_af(c, rho[c.link], w),
            Protocol::Df => sinr_df(c, rho[c.link], w).end_to_end,
        };
        acc * (T::one() + g)
    })
}

/// Lexicographic scan of the product of `axes`; returns the first maximiser.
/// An empty product is the single empty point.
fn search_box<T: Scalar>(axes: &[&[T]], eval: &mut impl FnMut(&[T]) -> T) -> (Vec<T>, T) {
    let n = axes.len();
    let mut idx = vec![0usize; n];
    let mut x: Vec<T> = axes.iter().map(|a| a[0]).collect();
    let mut best = (x.clone(), T::neg_infinity());
    loop {
        let obj = eval(&x);
        if obj > best.1 {
            best.0.copy_from_slice(&x);
            best.1 = obj;
        }
        // Odometer with the last axis fastest.
        let mut d = n;
        loop {
            if d == 0 {
                return best;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                x[d] = axes[d][idx[d]];
                break;
            }
            idx[d] = 0;
            x[d] = axes[d][0];
        }
    }
}
