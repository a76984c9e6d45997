//! Desk-scale simulator and optimizer for an uplink millimeter-wave
//! MIMO-NOMA system with a DFT analog codebook.
//!
//! The crate covers the full pipeline: geometric channel draws, beam
//! selection and two-user clustering, zero-forcing detection, the
//! parametric (Dinkelbach-style) outer search for max-min energy
//! efficiency, successive convex approximation of the detection and power
//! subproblems on a purpose-built log-barrier solver, baseline decoding
//! schemes, brute-force grid oracles, and a reproducible Monte-Carlo
//! harness with CSV/JSON emission.
//!
//! All numeric code is generic over the [`Scalar`] floating-point
//! abstraction; `*64` aliases at the crate root pin the common `f64`
//! instantiations.

pub mod baselines;
pub mod channel;
pub mod clustering;
pub mod config;
pub mod cvx;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod maxmin;
pub mod noma;
pub mod oracle;
pub mod scalar;

#[cfg(test)]
pub(crate) mod testutil;

pub use config::SystemConfig;
pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SystemConfig64 = config::SystemConfig<f64>;
pub type ChannelSet64 = channel::ChannelSet<f64>;
pub type Codebook64 = channel::Codebook<f64>;
pub type BeamPlan64 = clustering::BeamPlan<f64>;
pub type Solution64 = noma::Solution<f64>;
pub type ExperimentSpec64 = harness::ExperimentSpec<f64>;
