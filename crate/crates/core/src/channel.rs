//! Array responses, the DFT analog codebook, and geometric channel draws.
//!
//! Channels follow the sparse multipath model `h = sqrt(N/G) * sum_g a_g *
//! steer(theta_g)` with complex normal path gains and uniform angles of
//! arrival, so `E||h||^2 = N`. Random draws are split into one ChaCha
//! stream per user: stream `u` of a generator seeded with the experiment
//! seed always reproduces user `u`'s channel, independent of draw order.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::inner;
use crate::scalar::{fl, Scalar};

/// Response of an N-element uniform linear array with the given element
/// spacing (in wavelengths) towards angle `theta`:
/// entry n is `exp(j 2 pi spacing n sin(theta)) / sqrt(N)`.
pub fn steering_vector<T: Scalar>(n_antennas: usize, spacing: T, theta: T) -> Vec<Complex<T>> {
    let scale = T::one() / fl::<T>(n_antennas as f64).sqrt();
    let step = fl::<T>(2.0) * T::PI() * spacing * theta.sin();
    (0..n_antennas)
        .map(|n| {
            let phase = step * fl::<T>(n as f64);
            Complex::new(phase.cos() * scale, phase.sin() * scale)
        })
        .collect()
}

/// DFT beamforming codebook: K columns of length N with
/// `F[n][k] = exp(j 2 pi n k / K) / sqrt(N)` (indices from zero).
/// Every entry has magnitude `1/sqrt(N)`, so each column is unit norm and
/// realizable with phase shifters alone.
#[derive(Clone, Debug)]
pub struct Codebook<T> {
    n_antennas: usize,
    columns: Vec<Vec<Complex<T>>>,
}

impl<T: Scalar> Codebook<T> {
    pub fn dft(n_antennas: usize, size: usize) -> Self {
        assert!(n_antennas > 0 && size > 0, "codebook needs positive sizes");
        let scale = T::one() / fl::<T>(n_antennas as f64).sqrt();
        let columns = (0..size)
            .map(|k| {
                (0..n_antennas)
                    .map(|n| {
                        let phase =
                            fl::<T>(2.0) * T::PI() * fl::<T>((n * k) as f64) / fl::<T>(size as f64);
                        Complex::new(phase.cos() * scale, phase.sin() * scale)
                    })
                    .collect()
            })
            .collect();
        Self { n_antennas, columns }
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn size(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, k: usize) -> &[Complex<T>] {
        &self.columns[k]
    }

    /// Sine of the boresight angle of column `k` for the given element
    /// spacing, or `None` when the column has no visible steering direction.
    pub fn beam_sine(&self, k: usize, spacing: T) -> Option<T> {
        let size = fl::<T>(self.size() as f64);
        let mut u = fl::<T>(k as f64) / size;
        if u > fl::<T>(0.5) {
            u -= T::one();
        }
        let s = u / spacing;
        if s.abs() <= T::one() {
            Some(s)
        } else {
            None
        }
    }
}

/// One user's multipath state and the assembled channel vector.
#[derive(Clone, Debug)]
pub struct UserChannel<T> {
    /// Per-path complex gains.
    pub gains: Vec<Complex<T>>,
    /// Per-path angles of arrival, in radians.
    pub aoas: Vec<T>,
    /// Assembled channel vector of length N.
    pub h: Vec<Complex<T>>,
}

/// Builds `h = sqrt(N/G) * sum_g gains[g] * steer(aoas[g])`.
pub fn assemble_channel<T: Scalar>(
    n_antennas: usize,
    spacing: T,
    gains: &[Complex<T>],
    aoas: &[T],
) -> UserChannel<T> {
    assert_eq!(gains.len(), aoas.len(), "one gain per path");
    assert!(!gains.is_empty(), "need at least one path");
    let scale = (fl::<T>(n_antennas as f64) / fl::<T>(gains.len() as f64)).sqrt();
    let mut h = vec![Complex::new(T::zero(), T::zero()); n_antennas];
    for (g, theta) in gains.iter().zip(aoas) {
        let a = steering_vector(n_antennas, spacing, *theta);
        for (hn, an) in h.iter_mut().zip(&a) {
            *hn += *g * *an * scale;
        }
    }
    UserChannel {
        gains: gains.to_vec(),
        aoas: aoas.to_vec(),
        h,
    }
}

/// A drawn set of user channels over a common array.
#[derive(Clone, Debug)]
pub struct ChannelSet<T> {
    pub n_antennas: usize,
    pub users: Vec<UserChannel<T>>,
}

fn user_rng(seed: u64, user: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(user);
    rng
}

fn draw_gain<T: Scalar, R: Rng + ?Sized>(rng: &mut R, variance: T) -> Complex<T> {
    // CN(0, variance): real and imaginary parts are N(0, variance/2).
    let sd = (variance / fl::<T>(2.0)).sqrt();
    Complex::new(
        T::standard_normal(rng) * sd,
        T::standard_normal(rng) * sd,
    )
}

/// Draws the channel of a single user from its dedicated stream: all paths
/// have unit-variance gains and angles uniform over [-pi, pi).
pub fn user_channel<T: Scalar>(cfg: &SystemConfig<T>, seed: u64, user: usize) -> UserChannel<T> {
    let mut rng = user_rng(seed, user as u64);
    let mut gains = Vec::with_capacity(cfg.n_paths);
    let mut aoas = Vec::with_capacity(cfg.n_paths);
    for _ in 0..cfg.n_paths {
        gains.push(draw_gain(&mut rng, T::one()));
        aoas.push(T::uniform(&mut rng, -T::PI(), T::PI()));
    }
    assemble_channel(cfg.n_antennas, cfg.antenna_spacing, &gains, &aoas)
}

/// Draws the channels of the `2 * n_rf` served users.
pub fn generate_channels<T: Scalar>(cfg: &SystemConfig<T>, seed: u64) -> ChannelSet<T> {
    let users = (0..cfg.n_users())
        .map(|u| user_channel(cfg, seed, u))
        .collect();
    ChannelSet {
        n_antennas: cfg.n_antennas,
        users,
    }
}

/// Share of channel power left on the secondary paths when synthesizing a
/// beam-attached candidate; the first path absorbs the remainder so the
/// total still averages `E||h||^2 = N`.
const SECONDARY_PATH_POWER: f64 = 0.3;

/// Draws `per_beam` candidate users for each listed beam. Each candidate's
/// first path points at its beam's boresight, jittered by up to half a
/// codebook step in sine space, and carries most of the channel power;
/// remaining paths are drawn like [`user_channel`]. Candidate `c` uses
/// stream `c`, so the population is reproducible per user as well.
pub fn generate_user_population<T: Scalar>(
    cfg: &SystemConfig<T>,
    codebook: &Codebook<T>,
    beams: &[usize],
    per_beam: usize,
    seed: u64,
) -> Result<ChannelSet<T>> {
    let g = cfg.n_paths;
    let secondary = fl::<T>(SECONDARY_PATH_POWER);
    let dominant = fl::<T>(g as f64) - secondary * fl::<T>((g - 1) as f64);
    let half_step = T::one() / (fl::<T>(2.0 * codebook.size() as f64) * cfg.antenna_spacing);
    let mut users = Vec::with_capacity(beams.len() * per_beam);
    for (slot, beam) in beams.iter().flat_map(|b| (0..per_beam).map(move |_| b)).enumerate() {
        let sine = codebook
            .beam_sine(*beam, cfg.antenna_spacing)
            .ok_or_else(|| {
                Error::InvalidConfig(format!("beam {beam} has no visible steering direction"))
            })?;
        let mut rng = user_rng(seed, slot as u64);
        let mut gains = Vec::with_capacity(g);
        let mut aoas = Vec::with_capacity(g);
        let jitter = T::uniform(&mut rng, -half_step, half_step);
        let s = (sine + jitter).min(T::one()).max(-T::one());
        gains.push(draw_gain(&mut rng, dominant));
        aoas.push(s.asin());
        for _ in 1..g {
            gains.push(draw_gain(&mut rng, secondary));
            aoas.push(T::uniform(&mut rng, -T::PI(), T::PI()));
        }
        users.push(assemble_channel(
            cfg.n_antennas,
            cfg.antenna_spacing,
            &gains,
            &aoas,
        ));
    }
    Ok(ChannelSet {
        n_antennas: cfg.n_antennas,
        users,
    })
}

/// Effective channel seen through the analog combiner: entry m is
/// `f_{k_m}^H h` for the m-th selected codebook column.
pub fn effective_channel<T: Scalar>(
    codebook: &Codebook<T>,
    selected_beams: &[usize],
    h: &[Complex<T>],
) -> Vec<Complex<T>> {
    assert_eq!(h.len(), codebook.n_antennas(), "channel length");
    selected_beams
        .iter()
        .map(|&k| inner(codebook.column(k), h))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;

    fn cfg_small() -> SystemConfig<f64> {
        SystemConfig {
            n_antennas: 8,
            n_rf: 2,
            codebook_size: 8,
            ..SystemConfig::default()
        }
    }

    #[test]
    fn steering_broadside_is_flat() {
        let a = steering_vector::<f64>(4, 0.5, 0.0);
        for x in &a {
            assert!((x.re - 0.5).abs() < 1e-15 && x.im.abs() < 1e-15);
        }
    }

    #[test]
    fn steering_endfire_alternates_sign() {
        let a = steering_vector::<f64>(2, 0.5, std::f64::consts::FRAC_PI_2);
        let s = 1.0 / 2.0f64.sqrt();
        assert!((a[0].re - s).abs() < 1e-12 && a[0].im.abs() < 1e-12);
        assert!((a[1].re + s).abs() < 1e-12 && a[1].im.abs() < 1e-12);
    }

    #[test]
    fn steering_matches_scalar_loop() {
        let (n, spacing, theta) = (32usize, 0.5f64, 0.7f64);
        let a = steering_vector(n, spacing, theta);
        for (i, got) in a.iter().enumerate() {
            let phase = 2.0 * std::f64::consts::PI * spacing * (i as f64) * theta.sin();
            let want = Complex::from_polar(1.0 / (n as f64).sqrt(), phase);
            assert!((got - want).norm() < 1e-12);
        }
    }

    #[test]
    fn steering_is_unit_norm_for_any_angle() {
        for k in 0..16 {
            let theta = -3.0 + 0.4 * k as f64;
            let a = steering_vector::<f64>(16, 0.5, theta);
            assert!((norm2(&a) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dft_codebook_matches_definition() {
        let cb = Codebook::<f64>::dft(4, 8);
        // First column is the constant vector.
        for x in cb.column(0) {
            assert!((x.re - 0.5).abs() < 1e-15 && x.im.abs() < 1e-15);
        }
        // Row 1 of column 2: exp(j 2 pi * 2 / 8) / 2 = j/2.
        let e = cb.column(2)[1];
        assert!(e.re.abs() < 1e-15 && (e.im - 0.5).abs() < 1e-15);
        // Every entry has magnitude 1/sqrt(N) and every column unit norm.
        for k in 0..cb.size() {
            for x in cb.column(k) {
                assert!((x.norm() - 0.5).abs() < 1e-12);
            }
            assert!((norm2(cb.column(k)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dft_columns_peak_at_distinct_angles() {
        let cb = Codebook::<f64>::dft(4, 8);
        let grid: Vec<f64> = (0..2880)
            .map(|i| -std::f64::consts::PI + std::f64::consts::TAU * i as f64 / 2880.0)
            .collect();
        let mut peaks = Vec::new();
        for k in 0..cb.size() {
            let (mut best_i, mut best) = (0usize, -1.0f64);
            for (i, theta) in grid.iter().enumerate() {
                let a = steering_vector(4, 0.5, *theta);
                let gain = inner(cb.column(k), &a).norm_sqr();
                if gain > best {
                    best = gain;
                    best_i = i;
                }
            }
            peaks.push(grid[best_i].sin());
        }
        // Boresights must be distinct in sine space.
        for i in 0..peaks.len() {
            for j in i + 1..peaks.len() {
                assert!(
                    (peaks[i] - peaks[j]).abs() > 0.1,
                    "columns {i} and {j} peak together at sin {}",
                    peaks[i]
                );
            }
        }
    }

    #[test]
    fn beam_sine_wraps_high_columns() {
        let cb = Codebook::<f64>::dft(8, 8);
        assert_eq!(cb.beam_sine(0, 0.5), Some(0.0));
        assert!((cb.beam_sine(1, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!((cb.beam_sine(7, 0.5).unwrap() + 0.25).abs() < 1e-15);
        // A sparse array (small spacing) cannot see the edge columns.
        assert_eq!(cb.beam_sine(4, 0.25), None);
    }

    #[test]
    fn single_broadside_path_gives_the_flat_channel() {
        let user = assemble_channel::<f64>(4, 0.5, &[Complex::new(1.0, 0.0)], &[0.0]);
        // sqrt(N/1) * 1 * (1/sqrt(N)) * ones = ones.
        for x in &user.h {
            assert!((x.re - 1.0).abs() < 1e-14 && x.im.abs() < 1e-14);
        }
    }

    #[test]
    fn generation_is_deterministic_and_stream_split() {
        let cfg = cfg_small();
        let a = generate_channels(&cfg, 42);
        let b = generate_channels(&cfg, 42);
        for (ua, ub) in a.users.iter().zip(&b.users) {
            assert_eq!(ua.h, ub.h);
        }
        // Re-drawing one user alone reproduces the same channel.
        let lone = user_channel(&cfg, 42, 3);
        assert_eq!(lone.h, a.users[3].h);
        // A different seed moves every user.
        let c = generate_channels(&cfg, 43);
        assert!(a.users[0].h != c.users[0].h);
    }

    #[test]
    fn average_channel_power_matches_the_array_size() {
        let cfg = cfg_small();
        let n_draws = 10_000;
        let mut acc = 0.0;
        for u in 0..n_draws {
            let user = user_channel(&cfg, 7, u);
            acc += norm2(&user.h);
        }
        let mean = acc / n_draws as f64;
        let n = cfg.n_antennas as f64;
        assert!(
            (mean - n).abs() < 0.05 * n,
            "E||h||^2 = {mean}, expected about {n}"
        );
    }

    #[test]
    fn effective_channel_is_the_combiner_output() {
        let cb = Codebook::<f64>::dft(4, 8);
        let h = vec![Complex::new(1.0, 0.0); 4];
        let eff = effective_channel(&cb, &[0], &h);
        assert_eq!(eff.len(), 1);
        // f_0^H h = 4 * (1/2) = 2.
        assert!((eff[0].re - 2.0).abs() < 1e-14 && eff[0].im.abs() < 1e-14);
        // Against an explicit scalar loop on another column.
        let eff2 = effective_channel(&cb, &[3], &h);
        let mut want = Complex::new(0.0, 0.0);
        for (f, hn) in cb.column(3).iter().zip(&h) {
            want += f.conj() * hn;
        }
        assert!((eff2[0] - want).norm() < 1e-14);
    }

    #[test]
    fn population_attaches_candidates_to_their_beams() {
        let cfg = cfg_small();
        let cb = Codebook::dft(cfg.n_antennas, cfg.codebook_size);
        let beams = [0usize, 4];
        let set = generate_user_population(&cfg, &cb, &beams, 4, 11).unwrap();
        assert_eq!(set.users.len(), 8);
        // The dominant path lies within half a codebook step of the beam.
        for (i, user) in set.users.iter().enumerate() {
            let beam = beams[i / 4];
            let sine = cb.beam_sine(beam, cfg.antenna_spacing).unwrap();
            let gap = (user.aoas[0].sin() - sine).abs();
            assert!(gap <= 0.5 / (cfg.codebook_size as f64 * cfg.antenna_spacing) + 1e-12);
        }
    }
}
