//! Link geometry, path loss and Rayleigh-fading channel realizations.
//!
//! All links lie on mutually parallel lines of unit length. On link `i` the
//! source sits at longitudinal coordinate `0`, the relay at `d_sr` and the
//! destination at `d_sr + d_rd`; the line itself is displaced laterally by
//! `lateral_offset`. Cross-link distances are planar Euclidean distances in
//! that embedding.

use std::ops::{Index, IndexMut};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default `d_sr + d_rd`.
pub const UNIT_LINK_LENGTH: f64 = 1.0;

const LENGTH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Protocol {
    /// Amplify-and-forward.
    #[serde(rename = "AF")]
    Af,
    /// Decode-and-forward.
    #[serde(rename = "DF")]
    Df,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Af => "AF",
            Protocol::Df => "DF",
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "AF" => Ok(Protocol::Af),
            "DF" => Ok(Protocol::Df),
            other => Err(Error::config(format!("unknown relaying protocol `{other}` (expected AF or DF)"))),
        }
    }
}

/// A node on a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Source,
    Relay,
    Destination,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry<T> {
    d_sr: T,
    d_rd: T,
    lateral_offset: T,
}

impl<T: Scalar> LinkGeometry<T> {
    pub fn new(d_sr: T, d_rd: T, lateral_offset: T) -> Result<Self> {
        if !(d_sr > T::zero() && d_rd > T::zero()) {
            return Err(Error::config(format!(
                "link hop distances must be positive (d_sr = {d_sr}, d_rd = {d_rd})"
            )));
        }
        if !lateral_offset.is_finite() || !d_sr.is_finite() || !d_rd.is_finite() {
            return Err(Error::config("link geometry must be finite"));
        }
        Ok(Self { d_sr, d_rd, lateral_offset })
    }

    /// A link of unit length with the relay `relay_fraction` of the way along.
    pub fn unit(relay_fraction: T, lateral_offset: T) -> Result<Self> {
        if !(relay_fraction > T::zero() && relay_fraction < T::one()) {
            return Err(Error::config(format!(
                "relay fraction must lie strictly inside (0, 1), got {relay_fraction}"
            )));
        }
        let len = T::lit(UNIT_LINK_LENGTH);
        Self::new(relay_fraction * len, len - relay_fraction * len, lateral_offset)
    }

    pub fn d_sr(&self) -> T {
        self.d_sr
    }

    pub fn d_rd(&self) -> T {
        self.d_rd
    }

    pub fn lateral_offset(&self) -> T {
        self.lateral_offset
    }

    pub fn length(&self) -> T {
        self.d_sr + self.d_rd
    }

    /// Longitudinal coordinate of `node` along the link's line.
    pub fn position(&self, node: Node) -> T {
        match node {
            Node::Source => T::zero(),
            Node::Relay => self.d_sr,
            Node::Destination => self.d_sr + self.d_rd,
        }
    }
}

/// `n` parallel unit-length links with lateral offsets equally spaced over
/// `[0, d_max]`, all relays at the same fraction of their link.
pub fn build_parallel_geometry<T: Scalar>(
    n: usize,
    d_max: T,
    relay_fraction: T,
) -> Result<Vec<LinkGeometry<T>>> {
    build_parallel_geometry_with(n, d_max, &[relay_fraction])
}

/// Like [`build_parallel_geometry`] with per-link relay fractions. A single
/// fraction is broadcast to every link.
pub fn build_parallel_geometry_with<T: Scalar>(
    n: usize,
    d_max: T,
    relay_fractions: &[T],
) -> Result<Vec<LinkGeometry<T>>> {
    if n == 0 {
        return Err(Error::config("link count must be at least 1"));
    }
    if !(d_max >= T::zero()) || !d_max.is_finite() {
        return Err(Error::config(format!("d_max must be finite and non-negative, got {d_max}")));
    }
    if relay_fractions.len() != 1 && relay_fractions.len() != n {
        return Err(Error::config(format!(
            "expected 1 or {n} relay fractions, got {}",
            relay_fractions.len()
        )));
    }
    (0..n)
        .map(|i| {
            let offset = if n == 1 {
                T::zero()
            } else {
                d_max * T::lit(i as f64) / T::lit((n - 1) as f64)
            };
            let frac = relay_fractions[if relay_fractions.len() == 1 { 0 } else { i }];
            LinkGeometry::unit(frac, offset)
        })
        .collect()
}

/// Euclidean distance from node `from` on link `a` to node `to` on link `b`.
pub fn cross_distance<T: Scalar>(a: &LinkGeometry<T>, from: Node, b: &LinkGeometry<T>, to: Node) -> T {
    let dx = a.position(from) - b.position(to);
    let dy = a.lateral_offset - b.lateral_offset;
    dx.hypot(dy)
}

/// Mean power gain `distance^(-tau)` of a path-loss-only channel.
pub fn mean_gain<T: Scalar>(distance: T, tau: T) -> Result<T> {
    if !(distance > T::zero()) {
        return Err(Error::Domain(format!("path-loss distance must be positive, got {distance}")));
    }
    Ok(distance.powf(-tau))
}

/// Static problem instance. Powers are linear and relative to the noise
/// power.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkScenario<T> {
    powers: Vec<T>,
    geometries: Vec<LinkGeometry<T>>,
    protocols: Vec<Protocol>,
    tau: T,
    eta: T,
    sigma2: T,
}

impl<T: Scalar> NetworkScenario<T> {
    pub fn new(
        powers: Vec<T>,
        geometries: Vec<LinkGeometry<T>>,
        protocols: Vec<Protocol>,
        tau: T,
        eta: T,
        sigma2: T,
    ) -> Result<Self> {
        let n = powers.len();
        if n == 0 {
            return Err(Error::config("scenario needs at least one link"));
        }
        if geometries.len() != n || protocols.len() != n {
            return Err(Error::config(format!(
                "scenario size mismatch: {} powers, {} geometries, {} protocols",
                n,
                geometries.len(),
                protocols.len()
            )));
        }
        if let Some((i, p)) = powers.iter().enumerate().find(|(_, p)| !(**p > T::zero() && p.is_finite())) {
            return Err(Error::config(format!("power of link {i} must be positive and finite, got {p}")));
        }
        if !(eta > T::zero() && eta <= T::one()) {
            return Err(Error::config(format!("eta must satisfy 0 < eta <= 1, got {eta}")));
        }
        if !(sigma2 > T::zero() && sigma2.is_finite()) {
            return Err(Error::config(format!("sigma2 must be positive, got {sigma2}")));
        }
        if !(tau >= T::lit(2.0) && tau <= T::lit(5.0)) {
            return Err(Error::config(format!("path-loss exponent tau must lie in [2, 5], got {tau}")));
        }
        let unit = T::lit(UNIT_LINK_LENGTH);
        let tol = T::lit(LENGTH_TOL).max(T::epsilon() * T::lit(4.0));
        for (i, g) in geometries.iter().enumerate() {
            if (g.length() - unit).abs() > tol {
                return Err(Error::config(format!(
                    "link {i} has length {} instead of {}",
                    g.length(),
                    UNIT_LINK_LENGTH
                )));
            }
        }
        Ok(Self { powers, geometries, protocols, tau, eta, sigma2 })
    }

    /// Replaces the relaying protocols, e.g. to turn an AF instance hybrid.
    pub fn with_protocols(mut self, protocols: Vec<Protocol>) -> Result<Self> {
        if protocols.len() != self.n() {
            return Err(Error::config(format!(
                "expected {} protocols, got {}",
                self.n(),
                protocols.len()
            )));
        }
        self.protocols = protocols;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.powers.len()
    }

    pub fn powers(&self) -> &[T] {
        &self.powers
    }

    pub fn geometries(&self) -> &[LinkGeometry<T>] {
        &self.geometries
    }

    pub fn protocols(&self) -> &[Protocol] {
        &self.protocols
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn sigma2(&self) -> T {
        self.sigma2
    }
}

/// Converts a power quoted in dB (relative to the noise power) to linear scale.
pub fn db_to_linear<T: Scalar>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

/// Dense square matrix, row-major. Entry `(i, j)` belongs to the channel from
/// a transmitter on link `i` to a receiver on link `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> GainMatrix<T> {
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::config("gain matrix must be square"));
        }
        Ok(Self { n, data: rows.iter().flatten().copied().collect() })
    }

    pub fn filled(n: usize, v: T) -> Self {
        Self { n, data: vec![v; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }
}

impl<T> Index<(usize, usize)> for GainMatrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for GainMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

impl<T: Scalar + Serialize> Serialize for GainMatrix<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

/// One draw of all power gains. `g2[(i, j)] = |g_ij|^2` (source `i` to relay
/// `j`), `h2[(i, j)] = |h_ij|^2` (relay `i` to destination `j`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelRealization<T: Scalar> {
    pub g2: GainMatrix<T>,
    pub h2: GainMatrix<T>,
}

impl<T: Scalar> ChannelRealization<T> {
    pub fn new(g2: GainMatrix<T>, h2: GainMatrix<T>) -> Result<Self> {
        if g2.n() != h2.n() {
            return Err(Error::config(format!(
                "first-hop gains are {0}x{0} but second-hop gains are {1}x{1}",
                g2.n(),
                h2.n()
            )));
        }
        if g2.iter().chain(h2.iter()).any(|v| !(*v >= T::zero() && v.is_finite())) {
            return Err(Error::config("channel gains must be finite and non-negative"));
        }
        Ok(Self { g2, h2 })
    }

    pub fn from_rows(g2: &[Vec<T>], h2: &[Vec<T>]) -> Result<Self> {
        Self::new(GainMatrix::from_rows(g2)?, GainMatrix::from_rows(h2)?)
    }

    pub fn n(&self) -> usize {
        self.g2.n()
    }
}

/// Random stream for sub-experiment `stream` under `master_seed`.
///
/// Streams are ChaCha stream ids, so every (master, stream) pair is an
/// independent sequence that can be regenerated on its own.
pub fn trial_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Samples every gain of `scenario` from an exponential distribution with the
/// path-loss mean of its node pair, using `seed` as the whole random state.
pub fn sample_channels<T: Scalar>(scenario: &NetworkScenario<T>, seed: u64) -> ChannelRealization<T> {
    sample_channels_with(scenario, &mut trial_rng(seed, 0))
}

/// [`sample_channels`] drawing from a caller-supplied generator. Draw order is
/// all first-hop gains row-major, then all second-hop gains.
pub fn sample_channels_with<T: Scalar, R: Rng + ?Sized>(
    scenario: &NetworkScenario<T>,
    rng: &mut R,
) -> ChannelRealization<T> {
    let n = scenario.n();
    let geo = scenario.geometries();
    let tau = scenario.tau().as_f64();
    let mut draw = |from: &LinkGeometry<T>, fnode, to: &LinkGeometry<T>, tnode| -> T {
        // Sources sit at 0, destinations at 1 and relays strictly between, so
        // every sampled node pair is a positive distance apart.
        let d = cross_distance(from, fnode, to, tnode).as_f64();
        let mean = mean_gain(d, tau).expect("positive node distance");
        loop {
            let e: f64 = rng.sample(Exp1);
            let v = T::lit(mean * e);
            if v > T::zero() && v.is_finite() {
                return v;
            }
        }
    };
    let mut g2 = GainMatrix::filled(n, T::zero());
    for i in 0..n {
        for j in 0..n {
            g2[(i, j)] = draw(&geo[i], Node::Source, &geo[j], Node::Relay);
        }
    }
    let mut h2 = GainMatrix::filled(n, T::zero());
    for i in 0..n {
        for j in 0..n {
            h2[(i, j)] = draw(&geo[i], Node::Relay, &geo[j], Node::Destination);
        }
    }
    ChannelRealization { g2, h2 }
}

pub const FIXTURE_POWERS: [f64; 2] = [5.3080, 7.1917];
pub const FIXTURE_G2: [[f64; 2]; 2] = [[2.1713, 1.4836], [3.0937, 0.9773]];
pub const FIXTURE_H2: [[f64; 2]; 2] = [[0.4475, 1.5760], [1.5406, 2.6081]];

/// The reference two-link instance with both relays using `protocols`.
///
/// Noise power is 1 and `eta = 0.5`. The gains are fixed, so the geometry
/// (symmetric, relays mid-link, one unit apart, `tau = 3`) only matters if
/// the scenario is later resampled.
pub fn fixture_two_link_with<T: Scalar>(
    protocols: [Protocol; 2],
) -> (NetworkScenario<T>, ChannelRealization<T>) {
    let geometries = build_parallel_geometry(2, T::one(), T::lit(0.5)).expect("valid fixture geometry");
    let scenario = NetworkScenario::new(
        FIXTURE_POWERS.iter().map(|&p| T::lit(p)).collect(),
        geometries,
        protocols.to_vec(),
        T::lit(3.0),
        T::lit(0.5),
        T::one(),
    )
    .expect("valid fixture scenario");
    let rows = |m: [[f64; 2]; 2]| -> Vec<Vec<T>> {
        m.iter().map(|r| r.iter().map(|&v| T::lit(v)).collect()).collect()
    };
    let channels = ChannelRealization::from_rows(&rows(FIXTURE_G2), &rows(FIXTURE_H2)).expect("valid fixture gains");
    (scenario, channels)
}

/// The reference two-link instance with AF relays on both links.
pub fn fixture_two_link<T: Scalar>() -> (NetworkScenario<T>, ChannelRealization<T>) {
    fixture_two_link_with([Protocol::Af, Protocol::Af])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scenario(n: usize, d_max: f64) -> NetworkScenario<f64> {
        NetworkScenario::new(
            vec![db_to_linear(15.0); n],
            build_parallel_geometry(n, d_max, 0.5).unwrap(),
            vec![Protocol::Af; n],
            3.0,
            0.5,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn parallel_geometry_offsets() {
        let g = build_parallel_geometry(2, 2.0, 0.5).unwrap();
        assert_eq!(g.iter().map(|l| l.lateral_offset()).collect::<Vec<_>>(), vec![0.0, 2.0]);
        assert!(g.iter().all(|l| l.d_sr() == 0.5 && l.d_rd() == 0.5));

        let g = build_parallel_geometry(1, 5.0, 0.5).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].lateral_offset(), 0.0);

        let g = build_parallel_geometry(5, 5.0, 0.5).unwrap();
        let offsets: Vec<f64> = g.iter().map(|l| l.lateral_offset()).collect();
        assert_eq!(offsets, vec![0.0, 1.25, 2.5, 3.75, 5.0]);
    }

    #[test]
    fn relay_fraction_must_be_interior() {
        assert!(matches!(build_parallel_geometry(2, 1.0, 0.0), Err(Error::Config(_))));
        assert!(matches!(build_parallel_geometry(2, 1.0, 1.0), Err(Error::Config(_))));
        assert!(matches!(build_parallel_geometry(2, 1.0, -0.2), Err(Error::Config(_))));
        assert!(build_parallel_geometry(0, 1.0, 0.5).is_err());
    }

    #[test]
    fn link_length_is_preserved() {
        for frac in [0.1, 0.25, 0.5, 0.75, 0.9, 0.3333333] {
            let g = LinkGeometry::<f64>::unit(frac, 0.0).unwrap();
            assert!((g.length() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn cross_distances() {
        let g = build_parallel_geometry(2, 2.0, 0.5).unwrap();
        assert_eq!(cross_distance(&g[0], Node::Source, &g[0], Node::Relay), 0.5);
        assert_relative_eq!(
            cross_distance(&g[0], Node::Relay, &g[1], Node::Destination),
            (0.5f64 * 0.5 + 2.0 * 2.0).sqrt(),
            max_relative = 1e-15
        );
        let co = build_parallel_geometry(2, 0.0, 0.5).unwrap();
        assert_eq!(cross_distance(&co[0], Node::Source, &co[1], Node::Relay), 0.5);
    }

    #[test]
    fn path_loss_means() {
        assert_eq!(mean_gain(1.0, 3.0).unwrap(), 1.0);
        assert_relative_eq!(mean_gain(0.5, 2.0).unwrap(), 4.0);
        assert_relative_eq!(mean_gain(2.0, 3.0).unwrap(), 0.125);
        assert!(matches!(mean_gain(0.0, 3.0), Err(Error::Domain(_))));
        assert!(matches!(mean_gain(-1.0, 3.0), Err(Error::Domain(_))));
    }

    #[test]
    fn scenario_invariants() {
        let geo = build_parallel_geometry(1, 0.0, 0.5).unwrap();
        let mk = |p: f64, eta: f64, s2: f64, tau: f64| {
            NetworkScenario::new(vec![p], geo.clone(), vec![Protocol::Df], tau, eta, s2)
        };
        assert!(mk(1.0, 0.5, 1.0, 3.0).is_ok());
        assert!(mk(1.0, 1.0, 1.0, 2.0).is_ok());
        assert!(mk(0.0, 0.5, 1.0, 3.0).is_err());
        assert!(mk(1.0, 0.0, 1.0, 3.0).is_err());
        let err = mk(1.0, 1.5, 1.0, 3.0).unwrap_err();
        assert!(err.to_string().contains("eta"));
        assert!(mk(1.0, 0.5, 0.0, 3.0).is_err());
        assert!(mk(1.0, 0.5, 1.0, 1.5).is_err());
        assert!(mk(1.0, 0.5, 1.0, 5.5).is_err());
        assert!(NetworkScenario::new(vec![1.0, 1.0], geo.clone(), vec![Protocol::Af], 3.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = scenario(3, 2.0);
        assert_eq!(sample_channels(&s, 7), sample_channels(&s, 7));
        assert_ne!(sample_channels(&s, 7), sample_channels(&s, 8));
        let mut a = trial_rng(7, 3);
        let mut b = trial_rng(7, 3);
        assert_eq!(sample_channels_with(&s, &mut a), sample_channels_with(&s, &mut b));
    }

    #[test]
    fn single_link_shapes() {
        let s = scenario(1, 5.0);
        let c = sample_channels(&s, 1);
        assert_eq!(c.n(), 1);
        assert!(c.g2[(0, 0)] > 0.0 && c.h2[(0, 0)] > 0.0);
    }

    #[test]
    fn empirical_means_match_path_loss() {
        // Law of large numbers: the relative standard error of an exponential
        // mean over 1e5 draws is 1/sqrt(1e5) ~ 0.3%, so 2% is > 6 sigma.
        let s = scenario(2, 2.0);
        let geo = s.geometries();
        let draws = 100_000;
        let mut rng = trial_rng(11, 0);
        let mut g_sum = [[0.0f64; 2]; 2];
        let mut h_sum = [[0.0f64; 2]; 2];
        for _ in 0..draws {
            let c = sample_channels_with(&s, &mut rng);
            for i in 0..2 {
                for j in 0..2 {
                    g_sum[i][j] += c.g2[(i, j)];
                    h_sum[i][j] += c.h2[(i, j)];
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                let mg = mean_gain(cross_distance(&geo[i], Node::Source, &geo[j], Node::Relay), 3.0).unwrap();
                let mh = mean_gain(cross_distance(&geo[i], Node::Relay, &geo[j], Node::Destination), 3.0).unwrap();
                assert!((g_sum[i][j] / draws as f64 / mg - 1.0).abs() < 0.02, "g[{i}][{j}]");
                assert!((h_sum[i][j] / draws as f64 / mh - 1.0).abs() < 0.02, "h[{i}][{j}]");
            }
        }
    }

    #[test]
    fn gains_are_positive_and_finite() {
        // 1e6 gains: 31_250 realizations of a 4-link network (32 gains each).
        let s = scenario(4, 1.0);
        let mut rng = trial_rng(99, 1);
        for _ in 0..31_250 {
            let c = sample_channels_with(&s, &mut rng);
            assert!(c.g2.iter().chain(c.h2.iter()).all(|v| *v > 0.0 && v.is_finite()));
        }
    }

    #[test]
    fn fixture_values() {
        let (s, c) = fixture_two_link::<f64>();
        assert_eq!(s.powers()[0], 5.3080);
        assert_eq!(s.powers()[1], 7.1917);
        assert_eq!(c.g2[(1, 0)], 3.0937);
        assert_eq!(c.h2[(0, 1)], 1.5760);
        assert_eq!(s.eta(), 0.5);
        assert_eq!(s.sigma2(), 1.0);
    }

    #[test]
    fn db_conversion() {
        assert_relative_eq!(db_to_linear(0.0), 1.0);
        assert_relative_eq!(db_to_linear(10.0), 10.0);
        assert_relative_eq!(db_to_linear(15.0), 31.622776601683793, max_relative = 1e-14);
    }

    #[test]
    fn protocol_parsing() {
        assert_eq!("af".parse::<Protocol>().unwrap(), Protocol::Af);
        assert_eq!(" DF ".parse::<Protocol>().unwrap(), Protocol::Df);
        assert!("XF".parse::<Protocol>().is_err());
    }
}
