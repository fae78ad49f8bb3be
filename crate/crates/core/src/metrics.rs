//! Per-link SNR/INR coefficients, SINRs and achievable rates.
//!
//! For link `i` with noise power `s2`:
//!
//! ```text
//! X_i = P_i |g_ii|^2 / s2                          first-hop SNR
//! Y_i = sum_{j != i} P_j |g_ji|^2 / s2             first-hop INR
//! Z_i = eta (sum_n P_n |g_ni|^2) |h_ii|^2 / s2     second-hop SNR at rho_i = 1
//! W_i = sum_{j != i} rho_j M_ij                    second-hop INR
//! M_ij = eta (sum_n P_n |g_nj|^2) |h_ji|^2 / s2
//! ```
//!
//! Only `W_i` depends on the other links' splitting ratios.

use serde::Serialize;

use crate::channel::{ChannelRealization, NetworkScenario, Protocol};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkCoefficients<T> {
    /// Index of the link these coefficients belong to.
    pub link: usize,
    pub x: T,
    pub y: T,
    pub z: T,
    /// `M_ij` for every `j`; the own entry is zero.
    pub w_weights: Vec<T>,
}

impl<T: Scalar> LinkCoefficients<T> {
    /// Second-hop interference-to-noise ratio `W_i` under profile `rho`.
    ///
    /// `rho` need not be feasible: the standard-function checks evaluate the
    /// best-response map at scaled profiles outside `[0, 1]^N`.
    pub fn w_of(&self, rho: &[T]) -> T {
        debug_assert_eq!(rho.len(), self.w_weights.len());
        self.w_weights
            .iter()
            .zip(rho)
            .enumerate()
            .filter(|(j, _)| *j != self.link)
            .fold(T::zero(), |acc, (_, (m, r))| acc + *m * *r)
    }

    /// Achievable rate of this link when its own ratio is `rho_i` and the
    /// second-hop INR is `w`.
    pub fn utility(&self, protocol: Protocol, rho_i: T, w: T) -> T {
        let gamma = match protocol {
            Protocol::Af => sinr_af(self, rho_i, w),
            Protocol::Df => sinr_df(self, rho_i, w).end_to_end,
        };
        rate_from_sinr(gamma)
    }
}

/// Free-function form of [`LinkCoefficients::w_of`].
pub fn w_of<T: Scalar>(coeffs: &LinkCoefficients<T>, rho: &[T]) -> T {
    coeffs.w_of(rho)
}

/// A strategy profile: one power-splitting ratio per link, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SplitProfile<T>(Vec<T>);

impl<T: Scalar> SplitProfile<T> {
    pub fn new(rho: Vec<T>) -> Result<Self> {
        if rho.is_empty() {
            return Err(Error::config("profile must contain at least one ratio"));
        }
        if let Some((i, r)) = rho.iter().enumerate().find(|(_, r)| !(**r >= T::zero() && **r <= T::one())) {
            return Err(Error::config(format!("splitting ratio {i} must lie in [0, 1], got {r}")));
        }
        Ok(Self(rho))
    }

    pub fn uniform(n: usize, value: T) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn mean(&self) -> T {
        self.0.iter().fold(T::zero(), |a, b| a + *b) / T::lit(self.0.len() as f64)
    }
}

impl<T> std::ops::Index<usize> for SplitProfile<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

/// Coefficients of every link for one channel realization.
pub fn coefficients<T: Scalar>(
    scenario: &NetworkScenario<T>,
    channels: &ChannelRealization<T>,
) -> Result<Vec<LinkCoefficients<T>>> {
    let n = scenario.n();
    if channels.n() != n {
        return Err(Error::config(format!(
            "scenario has {n} links but the channel realization is {0}x{0}",
            channels.n()
        )));
    }
    Ok(coefficients_unchecked(
        scenario.powers(),
        channels,
        scenario.eta(),
        scenario.sigma2(),
    ))
}

fn coefficients_unchecked<T: Scalar>(
    powers: &[T],
    ch: &ChannelRealization<T>,
    eta: T,
    sigma2: T,
) -> Vec<LinkCoefficients<T>> {
    let n = powers.len();
    // Total power received at relay j from all sources.
    let received: Vec<T> = (0..n)
        .map(|j| (0..n).fold(T::zero(), |acc, k| acc + powers[k] * ch.g2[(k, j)]))
        .collect();
    (0..n)
        .map(|i| {
            let x = powers[i] * ch.g2[(i, i)] / sigma2;
            let y = (0..n)
                .filter(|&j| j != i)
                .fold(T::zero(), |acc, j| acc + powers[j] * ch.g2[(j, i)])
                / sigma2;
            let z = eta * received[i] * ch.h2[(i, i)] / sigma2;
            let w_weights = (0..n)
                .map(|j| {
                    if j == i {
                        T::zero()
                    } else {
                        eta * received[j] * ch.h2[(j, i)] / sigma2
                    }
                })
                .collect();
            LinkCoefficients { link: i, x, y, z, w_weights }
        })
        .collect()
}

/// End-to-end SINR of an amplify-and-forward link, in the simplified form
/// whose denominator is at least `W + 1` on `[0, 1]`.
pub fn sinr_af<T: Scalar>(c: &LinkCoefficients<T>, rho_i: T, w: T) -> T {
    let one = T::one();
    let keep = one - rho_i;
    let w1 = w + one;
    let num = rho_i * keep * c.x * c.z;
    let den = rho_i * keep * c.y * c.z + keep * (c.x + c.y) * w1 + rho_i * c.z + w1;
    num / den
}

/// Hop SINRs of a decode-and-forward link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfSinr<T> {
    /// At the relay: `(1 - rho) X / ((1 - rho) Y + 1)`.
    pub first_hop: T,
    /// At the destination: `rho Z / (W + 1)`.
    pub second_hop: T,
    pub end_to_end: T,
}

pub fn sinr_df<T: Scalar>(c: &LinkCoefficients<T>, rho_i: T, w: T) -> DfSinr<T> {
    let keep = T::one() - rho_i;
    let first_hop = keep * c.x / (keep * c.y + T::one());
    let second_hop = rho_i * c.z / (w + T::one());
    DfSinr { first_hop, second_hop, end_to_end: first_hop.min(second_hop) }
}

/// Two-hop achievable rate `log2(1 + gamma) / 2` in bits per channel use.
pub fn rate_from_sinr<T: Scalar>(gamma: T) -> T {
    T::lit(0.5) * gamma.ln_1p() / T::lit(std::f64::consts::LN_2)
}

/// Rate of link `coeffs.link` under the full profile `rho`.
pub fn rate<T: Scalar>(coeffs: &LinkCoefficients<T>, protocol: Protocol, rho: &[T]) -> T {
    coeffs.utility(protocol, rho[coeffs.link], coeffs.w_of(rho))
}

/// Per-link rates from precomputed coefficients.
pub fn link_rates_with<T: Scalar>(coeffs: &[LinkCoefficients<T>], protocols: &[Protocol], rho: &[T]) -> Vec<T> {
    coeffs.iter().zip(protocols).map(|(c, p)| rate(c, *p, rho)).collect()
}

pub fn link_rates<T: Scalar>(
    scenario: &NetworkScenario<T>,
    channels: &ChannelRealization<T>,
    rho: &SplitProfile<T>,
) -> Result<Vec<T>> {
    check_len(scenario.n(), rho)?;
    let coeffs = coefficients(scenario, channels)?;
    Ok(link_rates_with(&coeffs, scenario.protocols(), rho.as_slice()))
}

/// Network sum-rate, each link evaluated under its own protocol.
pub fn sum_rate<T: Scalar>(
    scenario: &NetworkScenario<T>,
    channels: &ChannelRealization<T>,
    rho: &SplitProfile<T>,
) -> Result<T> {
    Ok(link_rates(scenario, channels, rho)?.into_iter().fold(T::zero(), |a, b| a + b))
}

pub fn sum_rate_with<T: Scalar>(coeffs: &[LinkCoefficients<T>], protocols: &[Protocol], rho: &[T]) -> T {
    link_rates_with(coeffs, protocols, rho).into_iter().fold(T::zero(), |a, b| a + b)
}

/// Energy harvested at relay `i` when it diverts the fraction `rho_i`.
pub fn harvested_power<T: Scalar>(
    scenario: &NetworkScenario<T>,
    channels: &ChannelRealization<T>,
    i: usize,
    rho_i: T,
) -> T {
    let received = scenario
        .powers()
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (n, p)| acc + *p * channels.g2[(n, i)]);
    scenario.eta() * rho_i * received
}

fn check_len<T: Scalar>(n: usize, rho: &SplitProfile<T>) -> Result<()> {
    if rho.len() != n {
        return Err(Error::config(format!("profile has {} ratios for {n} links", rho.len())));
    }
    Ok(())
}
