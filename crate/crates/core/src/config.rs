//! System-level configuration shared by every module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{fl, Scalar};

/// Static description of the uplink: array geometry, codebook size, user
/// pairing width, power model and the rate floor.
///
/// Defaults describe the reference setup: a 32-antenna uniform linear array
/// with half-wavelength spacing driven by 4 RF chains (so 8 users, two per
/// analog beam), 3 propagation paths per user, 100 mW circuit power, an
/// amplifier inefficiency of 1/0.38 and a 0.2 bps/Hz rate floor.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(
    bound(serialize = "T: Serialize", deserialize = "T: serde::de::DeserializeOwned"),
    default
)]
pub struct SystemConfig<T: Scalar> {
    /// Antenna count N of the uniform linear array.
    pub n_antennas: usize,
    /// RF chain count M; one analog beam, hence one two-user cluster, each.
    pub n_rf: usize,
    /// Codebook column count K (K >= N, M divides K).
    pub codebook_size: usize,
    /// Propagation path count G per user channel.
    pub n_paths: usize,
    /// Noise power (delta^2) at the combiner input, in watts.
    pub noise_power: T,
    /// Circuit power consumption Pc per user, in watts.
    pub circuit_power: T,
    /// Power amplifier inefficiency xi (> 1); transmit chain draws xi * P.
    pub amp_inefficiency: T,
    /// Minimum spectral efficiency per user, in bps/Hz.
    pub r_min: T,
    /// Transmit power budget per user, in watts.
    pub p_max: T,
    /// Element spacing over wavelength (d / lambda).
    pub antenna_spacing: T,
    /// Model the post-combining noise as delta^2 * ||v W||^2 instead of the
    /// nominal delta^2 (the norm constraint makes both coincide at its
    /// boundary).
    pub exact_noise: bool,
    /// Use the standard SINR floor 2^r - 1 in the power-control constraint
    /// instead of the conservative factor 2^r.
    pub standard_min_rate: bool,
}

impl<T: Scalar> Default for SystemConfig<T> {
    fn default() -> Self {
        Self {
            n_antennas: 32,
            n_rf: 4,
            codebook_size: 32,
            n_paths: 3,
            noise_power: fl(0.01),
            circuit_power: fl(0.1),
            amp_inefficiency: fl(1.0 / 0.38),
            r_min: fl(0.2),
            p_max: fl(1.0),
            antenna_spacing: fl(0.5),
            exact_noise: false,
            standard_min_rate: false,
        }
    }
}

impl<T: Scalar> SystemConfig<T> {
    /// Number of served users (two per beam).
    pub fn n_users(&self) -> usize {
        2 * self.n_rf
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_antennas == 0 {
            return Err(Error::InvalidConfig("n_antennas must be positive".into()));
        }
        if self.n_rf == 0 || self.n_rf > self.n_antennas {
            return Err(Error::InvalidConfig(format!(
                "n_rf must lie in 1..=n_antennas, got {} with {} antennas",
                self.n_rf, self.n_antennas
            )));
        }
        if self.codebook_size < self.n_antennas {
            return Err(Error::InvalidConfig(format!(
                "codebook_size {} must be at least n_antennas {}",
                self.codebook_size, self.n_antennas
            )));
        }
        if !self.codebook_size.is_multiple_of(self.n_rf) {
            return Err(Error::InvalidConfig(format!(
                "n_rf {} must divide codebook_size {}",
                self.n_rf, self.codebook_size
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidConfig("n_paths must be positive".into()));
        }
        if self.noise_power <= T::zero() {
            return Err(Error::InvalidConfig("noise_power must be positive".into()));
        }
        if self.circuit_power <= T::zero() {
            return Err(Error::InvalidConfig(
                "circuit_power must be positive".into(),
            ));
        }
        if self.amp_inefficiency <= T::one() {
            return Err(Error::InvalidConfig(
                "amp_inefficiency must exceed 1".into(),
            ));
        }
        if self.r_min < T::zero() {
            return Err(Error::InvalidConfig("r_min must be nonnegative".into()));
        }
        if self.p_max <= T::zero() {
            return Err(Error::InvalidConfig("p_max must be positive".into()));
        }
        if self.antenna_spacing <= T::zero() {
            return Err(Error::InvalidConfig(
                "antenna_spacing must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Power-control SINR factor enforcing the rate floor for a user that
    /// holds the channel for a `slot_fraction` share of the slot. The
    /// conservative default keeps the factor at `2^(r/slot)`; the standard
    /// form subtracts one.
    pub fn min_rate_factor(&self, slot_fraction: T) -> T {
        let pow = (self.r_min / slot_fraction).exp2();
        if self.standard_min_rate {
            pow - T::one()
        } else {
            pow
        }
    }

    /// SINR value at which `slot_fraction * log2(1 + sinr)` meets the floor.
    pub fn sinr_floor(&self, slot_fraction: T) -> T {
        (self.r_min / slot_fraction).exp2() - T::one()
    }
}
