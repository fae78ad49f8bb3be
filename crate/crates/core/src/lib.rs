//! Distributed power splitting for simultaneous wireless information and
//! power transfer (SWIPT) in relay interference channels.
//!
//! Every link `S_i -> R_i -> D_i` owns an energy-harvesting relay that splits
//! its received signal: a fraction `rho_i` powers the second hop, the rest is
//! forwarded (amplify-and-forward) or decoded and re-encoded
//! (decode-and-forward). Links are players in a non-cooperative game whose
//! utility is their own achievable rate; the unique Nash equilibrium is
//! reached by iterating closed-form best responses.
//!
//! Layout:
//!
//! - [`channel`]: link geometry, path loss, Rayleigh fading samples and the
//!   canonical two-link instance.
//! - [`metrics`]: per-link SNR/INR coefficients, SINRs, rates, harvested power.
//! - [`game`]: best responses, simultaneous best-response iteration and
//!   standard-function checks.
//! - [`baselines`]: random splitting and grid-search references.
//! - [`experiments`]: seeded Monte Carlo sweeps and CSV export.
//! - [`verify`]: randomized property battery over generated instances.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the experiment harness uses.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod channel;
mod error;
pub mod experiments;
pub mod game;
pub mod metrics;
mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use channel::{ChannelRealization, LinkGeometry, NetworkScenario, Node, Protocol};
pub use game::{EquilibriumResult, InitialProfile, SolverOptions};
pub use metrics::{LinkCoefficients, SplitProfile};

pub type Scenario = channel::NetworkScenario<f64>;
pub type Channels = channel::ChannelRealization<f64>;
pub type Coefficients = metrics::LinkCoefficients<f64>;
pub type Profile = metrics::SplitProfile<f64>;
pub type Equilibrium = game::EquilibriumResult<f64>;
pub type Options = game::SolverOptions<f64>;

pub type Scenario32 = channel::NetworkScenario<f32>;
pub type Channels32 = channel::ChannelRealization<f32>;
pub type Equilibrium32 = game::EquilibriumResult<f32>;
