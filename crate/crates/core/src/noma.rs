//! Decoding order, interference bookkeeping, and the SINR/rate/energy
//! kernel shared by the optimized system and every baseline.
//!
//! Users are addressed by `(beam, slot)` with slot 0 the strong user of
//! the pair. All decoding variants are expressed as an [`InterferenceMap`]:
//! the set of users whose signals survive into a given user's detection.
//! Rates then always flow through the same SINR kernel, which keeps the
//! schemes comparable by construction.

use num_complex::Complex;

use crate::clustering::BeamPlan;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::scalar::{fl, Scalar};

/// Condition-estimate ceiling above which the strong-user matrix is
/// treated as degenerate.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Plain (non-conjugating) product of a detection row with an effective
/// channel column.
pub fn row_dot<T: Scalar>(v: &[Complex<T>], h: &[Complex<T>]) -> Complex<T> {
    debug_assert_eq!(v.len(), h.len());
    let mut acc = Complex::new(T::zero(), T::zero());
    for (a, b) in v.iter().zip(h) {
        acc += *a * *b;
    }
    acc
}

/// Global successive-decoding order: users sorted by effective-channel
/// norm, strongest first, ties to the lower (beam, slot) index.
#[derive(Clone, Debug)]
pub struct DecodingOrder {
    order: Vec<(usize, usize)>,
    rank: Vec<[usize; 2]>,
}

pub fn decoding_order<T: Scalar>(plan: &BeamPlan<T>) -> DecodingOrder {
    let mut order: Vec<(usize, usize)> = plan.slots().collect();
    order.sort_by(|&(am, ai), &(bm, bi)| {
        let na = plan.eff_norm2(am, ai);
        let nb = plan.eff_norm2(bm, bi);
        nb.partial_cmp(&na)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then((am, ai).cmp(&(bm, bi)))
    });
    let mut rank = vec![[0usize; 2]; plan.n_beams()];
    for (pos, &(m, i)) in order.iter().enumerate() {
        rank[m][i] = pos;
    }
    DecodingOrder { order, rank }
}

impl DecodingOrder {
    pub fn order(&self) -> &[(usize, usize)] {
        &self.order
    }

    pub fn rank(&self, beam: usize, slot: usize) -> usize {
        self.rank[beam][slot]
    }

    /// Users decoded strictly after `(beam, slot)`, i.e. with strictly
    /// weaker effective channels under the global order.
    pub fn weaker_set(&self, beam: usize, slot: usize) -> Vec<(usize, usize)> {
        self.order[self.rank[beam][slot] + 1..].to_vec()
    }
}

/// Which users interfere with whom, plus the share of the slot each user
/// transmits in (1 for NOMA operation, 1/2 for the orthogonal baseline).
#[derive(Clone, Debug)]
pub struct InterferenceMap<T> {
    sets: Vec<[Vec<(usize, usize)>; 2]>,
    pub slot_fraction: T,
}

impl<T: Scalar> InterferenceMap<T> {
    pub fn new(sets: Vec<[Vec<(usize, usize)>; 2]>, slot_fraction: T) -> Self {
        Self {
            sets,
            slot_fraction,
        }
    }

    pub fn n_beams(&self) -> usize {
        self.sets.len()
    }

    pub fn set(&self, beam: usize, slot: usize) -> &[(usize, usize)] {
        &self.sets[beam][slot]
    }

    /// Full successive cancellation in the global order: user (m, i) hears
    /// exactly the users decoded after it.
    pub fn global_sic(order: &DecodingOrder, n_beams: usize) -> Self {
        let sets = (0..n_beams)
            .map(|m| [order.weaker_set(m, 0), order.weaker_set(m, 1)])
            .collect();
        Self::new(sets, T::one())
    }

    /// Residual interference under zero-forcing detection: strong users are
    /// nulled spatially, so only weak-slot users decoded after (m, i)
    /// remain.
    pub fn zf_weak(order: &DecodingOrder, n_beams: usize) -> Self {
        let sets = (0..n_beams)
            .map(|m| {
                [0, 1].map(|i| {
                    order
                        .weaker_set(m, i)
                        .into_iter()
                        .filter(|&(_, l)| l == 1)
                        .collect()
                })
            })
            .collect();
        Self::new(sets, T::one())
    }
}

/// Per-beam detection rows `v_m` (length M), applied to effective
/// channels. Rows are scaled so that `||v_m W||` never exceeds one.
#[derive(Clone, Debug)]
pub struct DetectionMatrix<T> {
    pub rows: Vec<Vec<Complex<T>>>,
}

impl<T: Scalar> DetectionMatrix<T> {
    pub fn n_beams(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, m: usize) -> &[Complex<T>] {
        &self.rows[m]
    }
}

/// Zero-forcing detection built on the strong users: with `H` the matrix
/// of strong effective channels, the raw rows are `H^-1` (equivalently the
/// pseudo-inverse `(H^H H)^-1 H^H` for square invertible `H`), then each
/// row is scaled to make `||v_m W|| = 1` exactly. Errors when the
/// condition estimate of `H` exceeds [`CONDITION_LIMIT`].
pub fn zf_detection<T: Scalar>(plan: &BeamPlan<T>) -> Result<DetectionMatrix<T>> {
    let m_beams = plan.n_beams();
    let mut h = crate::linalg::CMat::zeros(m_beams, m_beams);
    for c in 0..m_beams {
        let col = plan.effective(c, 0);
        for r in 0..m_beams {
            h[(r, c)] = col[r];
        }
    }
    let inv = h
        .inverse()
        .map_err(|_| Error::DegenerateChannel { cond: f64::INFINITY })?;
    let cond = (h.frob_norm() * inv.frob_norm())
        .to_f64()
        .unwrap_or(f64::INFINITY);
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Err(Error::DegenerateChannel { cond });
    }
    let rows = (0..m_beams)
        .map(|m| {
            let row = inv.row(m);
            let through = plan.combiner.row_vec_mul(row);
            let scale = norm2(&through).sqrt();
            row.iter().map(|x| x / scale).collect()
        })
        .collect();
    Ok(DetectionMatrix { rows })
}

/// Per-user transmit powers in watts, indexed like the beam plan.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerAllocation<T> {
    pub p: Vec<[T; 2]>,
}

impl<T: Scalar> PowerAllocation<T> {
    pub fn uniform(n_beams: usize, level: T) -> Self {
        Self {
            p: vec![[level; 2]; n_beams],
        }
    }

    pub fn get(&self, beam: usize, slot: usize) -> T {
        self.p[beam][slot]
    }
}

/// Precomputed detection gains `g[m][j][l] = |v_m hbar_jl|^2` plus the
/// per-beam post-combining noise power.
#[derive(Clone, Debug)]
pub struct GainTable<T> {
    pub g: Vec<Vec<[T; 2]>>,
    pub noise: Vec<T>,
}

impl<T: Scalar> GainTable<T> {
    pub fn build(
        det: &DetectionMatrix<T>,
        plan: &BeamPlan<T>,
        cfg: &SystemConfig<T>,
    ) -> Self {
        let m_beams = plan.n_beams();
        let g = (0..m_beams)
            .map(|m| {
                (0..m_beams)
                    .map(|j| {
                        [0, 1].map(|l| row_dot(det.row(m), plan.effective(j, l)).norm_sqr())
                    })
                    .collect()
            })
            .collect();
        let noise = (0..m_beams)
            .map(|m| {
                if cfg.exact_noise {
                    cfg.noise_power * norm2(&plan.combiner.row_vec_mul(det.row(m)))
                } else {
                    cfg.noise_power
                }
            })
            .collect();
        Self { g, noise }
    }

    pub fn own(&self, beam: usize, slot: usize) -> T {
        self.g[beam][beam][slot]
    }
}

/// SINR of user `(beam, slot)` under the given interference map:
/// `g_own P / (sum_{(j,l) in set} g[beam][j][l] P_jl + noise[beam])`.
pub fn sinr<T: Scalar>(
    gains: &GainTable<T>,
    map: &InterferenceMap<T>,
    power: &PowerAllocation<T>,
    beam: usize,
    slot: usize,
) -> T {
    let mut den = gains.noise[beam];
    for &(j, l) in map.set(beam, slot) {
        den += gains.g[beam][j][l] * power.get(j, l);
    }
    gains.own(beam, slot) * power.get(beam, slot) / den
}

/// Shannon rate over the user's share of the slot.
pub fn rate<T: Scalar>(sinr: T, slot_fraction: T) -> T {
    slot_fraction * (T::one() + sinr).log2()
}

/// Total consumed power `Pc + xi * P`.
pub fn total_power<T: Scalar>(cfg: &SystemConfig<T>, p: T) -> T {
    cfg.circuit_power + cfg.amp_inefficiency * p
}

/// Energy efficiency in bits per joule per hertz.
pub fn energy_efficiency<T: Scalar>(rate: T, total_power: T) -> T {
    rate / total_power
}

/// All user rates under one map.
pub fn all_rates<T: Scalar>(
    gains: &GainTable<T>,
    map: &InterferenceMap<T>,
    power: &PowerAllocation<T>,
) -> Vec<[T; 2]> {
    (0..map.n_beams())
        .map(|m| [0, 1].map(|i| rate(sinr(gains, map, power, m, i), map.slot_fraction)))
        .collect()
}

/// SINRs under zero-forcing detection with cross-cluster cancellation of
/// stronger weak users (the reduced interference sets of [`InterferenceMap::zf_weak`]).
pub fn zf_sinr<T: Scalar>(
    gains: &GainTable<T>,
    order: &DecodingOrder,
    power: &PowerAllocation<T>,
) -> Vec<[T; 2]> {
    let map = InterferenceMap::zf_weak(order, gains.g.len());
    (0..map.n_beams())
        .map(|m| [0, 1].map(|i| sinr(gains, &map, power, m, i)))
        .collect()
}

/// Componentwise-least power vector meeting the SINR floor
/// `g_own P >= factor * (interference + noise)` for every user, found by
/// monotone fixed-point iteration from zero. `headroom` inflates the
/// factor (e.g. 0.01 for one percent) so the result sits strictly inside
/// the floor; errors with [`Error::Infeasible`] when the budget `p_max`
/// cannot hold the floor.
pub fn min_power_fill<T: Scalar>(
    gains: &GainTable<T>,
    map: &InterferenceMap<T>,
    cfg: &SystemConfig<T>,
    headroom: T,
) -> Result<PowerAllocation<T>> {
    let m_beams = map.n_beams();
    let factor = cfg.min_rate_factor(map.slot_fraction) * (T::one() + headroom);
    if factor <= T::zero() {
        return Ok(PowerAllocation::uniform(m_beams, T::zero()));
    }
    for m in 0..m_beams {
        for i in 0..2 {
            if gains.own(m, i) <= T::zero() {
                return Err(Error::Infeasible);
            }
        }
    }
    let budget = cfg.p_max * (T::one() + fl(1e-9));
    let mut p = PowerAllocation::uniform(m_beams, T::zero());
    let tol = cfg.p_max * fl(1e-14);
    for _ in 0..10_000 {
        let mut next = p.clone();
        let mut delta = T::zero();
        for m in 0..m_beams {
            for i in 0..2 {
                let mut den = gains.noise[m];
                for &(j, l) in map.set(m, i) {
                    den += gains.g[m][j][l] * p.get(j, l);
                }
                let req = factor * den / gains.own(m, i);
                if req > budget {
                    return Err(Error::Infeasible);
                }
                delta = delta.max((req - p.p[m][i]).abs());
                next.p[m][i] = req;
            }
        }
        p = next;
        if delta < tol {
            return Ok(p);
        }
    }
    // No convergence within the iteration cap: the spectral radius of the
    // interference coupling is at or above one, so the floor is unreachable.
    Err(Error::Infeasible)
}

/// Counters for the optimization machinery, accumulated across nested
/// loops for complexity accounting.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct Counters {
    pub bisection_iters: usize,
    pub alternation_rounds: usize,
    pub sca_rounds: usize,
    pub cccp_rounds: usize,
    pub subproblem_solves: usize,
    pub newton_steps: usize,
    pub rejected_steps: usize,
}

impl Counters {
    pub fn absorb(&mut self, other: &Counters) {
        self.bisection_iters += other.bisection_iters;
        self.alternation_rounds += other.alternation_rounds;
        self.sca_rounds += other.sca_rounds;
        self.cccp_rounds += other.cccp_rounds;
        self.subproblem_solves += other.subproblem_solves;
        self.newton_steps += other.newton_steps;
        self.rejected_steps += other.rejected_steps;
    }
}

/// Objective traces kept for convergence diagnostics.
#[derive(Clone, Debug, Default, serde::Serialize)]
#[serde(bound(serialize = "T: serde::Serialize"))]
pub struct Traces<T> {
    /// `(eta, L(eta))` per outer bisection step.
    pub bisection: Vec<(T, T)>,
    /// Accepted objective values along the scheme-1 alternation (last
    /// inner solve).
    pub alternation_z: Vec<T>,
    /// Accepted objective values per detection-step call.
    pub detection_z: Vec<Vec<T>>,
    /// Accepted objective values per power-step call.
    pub power_z: Vec<Vec<T>>,
    /// Alternation rounds per inner solve.
    pub alternations_per_eval: Vec<usize>,
    /// Power-step rounds per call.
    pub cccp_per_call: Vec<usize>,
    /// Detection-step rounds per call.
    pub sca_per_call: Vec<usize>,
}

impl<T> Traces<T> {
    pub fn absorb(&mut self, other: Traces<T>) {
        self.bisection.extend(other.bisection);
        self.alternation_z = other.alternation_z;
        self.detection_z.extend(other.detection_z);
        self.power_z.extend(other.power_z);
        self.alternations_per_eval.extend(other.alternations_per_eval);
        self.cccp_per_call.extend(other.cccp_per_call);
        self.sca_per_call.extend(other.sca_per_call);
    }
}

/// A complete resource allocation with its achieved metrics.
#[derive(Clone, Debug)]
pub struct Solution<T> {
    /// Energy-efficiency parameter the solve ran at (the max-min energy
    /// efficiency after a converged outer search).
    pub eta: T,
    /// `min_user (rate - eta * total_power)` at the returned allocation.
    pub z_value: T,
    pub detection: DetectionMatrix<T>,
    pub power: PowerAllocation<T>,
    pub rates: Vec<[T; 2]>,
    pub ee: Vec<[T; 2]>,
    pub min_rate: T,
    pub sum_rate: T,
    pub min_ee: T,
    pub counters: Counters,
    pub traces: Traces<T>,
}

impl<T: Scalar> Solution<T> {
    /// Evaluates rates and efficiencies of `(det, power)` under `map` and
    /// packages them.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        eta: T,
        plan: &BeamPlan<T>,
        map: &InterferenceMap<T>,
        cfg: &SystemConfig<T>,
        det: DetectionMatrix<T>,
        power: PowerAllocation<T>,
        counters: Counters,
        traces: Traces<T>,
    ) -> Self {
        let gains = GainTable::build(&det, plan, cfg);
        let rates = all_rates(&gains, map, &power);
        let mut min_rate = T::infinity();
        let mut sum_rate = T::zero();
        let mut min_ee = T::infinity();
        let mut z_value = T::infinity();
        let mut ee = Vec::with_capacity(rates.len());
        for (m, pair) in rates.iter().enumerate() {
            let mut e = [T::zero(); 2];
            for i in 0..2 {
                let r = pair[i];
                let tp = total_power(cfg, power.get(m, i));
                e[i] = energy_efficiency(r, tp);
                min_rate = min_rate.min(r);
                sum_rate += r;
                min_ee = min_ee.min(e[i]);
                z_value = z_value.min(r - eta * tp);
            }
            ee.push(e);
        }
        Self {
            eta,
            z_value,
            detection: det,
            power,
            rates,
            ee,
            min_rate,
            sum_rate,
            min_ee,
            counters,
            traces,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::plan_from_effective;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn simple_cfg() -> SystemConfig<f64> {
        SystemConfig {
            n_antennas: 2,
            n_rf: 2,
            codebook_size: 2,
            noise_power: 0.1,
            ..SystemConfig::default()
        }
    }

    /// Two beams; norms per slot: (0,0)=5, (0,1)=2, (1,0)=4, (1,1)=1.
    fn ladder_plan() -> BeamPlan<f64> {
        plan_from_effective(vec![
            [
                vec![c(5.0, 0.0), c(0.0, 0.0)],
                vec![c(2.0, 0.0), c(0.0, 0.0)],
            ],
            [
                vec![c(0.0, 0.0), c(4.0, 0.0)],
                vec![c(0.0, 0.0), c(1.0, 0.0)],
            ],
        ])
    }

    #[test]
    fn decoding_order_sorts_by_norm() {
        let plan = ladder_plan();
        let order = decoding_order(&plan);
        assert_eq!(order.order(), &[(0, 0), (1, 0), (0, 1), (1, 1)]);
        assert_eq!(order.weaker_set(1, 0), vec![(0, 1), (1, 1)]);
        assert_eq!(order.weaker_set(1, 1), vec![]);
        assert_eq!(order.rank(0, 1), 2);
    }

    #[test]
    fn decoding_order_matches_comparison_sort() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..25 {
            let effective: Vec<[Vec<Complex<f64>>; 2]> = (0..3)
                .map(|_| {
                    [0, 1].map(|_| {
                        (0..3)
                            .map(|_| c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
                            .collect()
                    })
                })
                .collect();
            let plan = plan_from_effective(effective);
            let order = decoding_order(&plan);
            let mut oracle: Vec<(usize, usize)> = plan.slots().collect();
            oracle.sort_by(|&a, &b| {
                plan.eff_norm2(b.0, b.1)
                    .partial_cmp(&plan.eff_norm2(a.0, a.1))
                    .unwrap()
                    .then(a.cmp(&b))
            });
            assert_eq!(order.order(), oracle.as_slice());
        }
    }

    #[test]
    fn tie_break_prefers_the_lower_slot() {
        let plan = plan_from_effective(vec![[
            vec![c(1.0, 0.0)],
            vec![c(0.0, 1.0)], // same norm as the strong slot
        ]]);
        let order = decoding_order(&plan);
        assert_eq!(order.order(), &[(0, 0), (0, 1)]);
    }

    #[test]
    fn weaker_set_sizes_sum_to_all_pairs() {
        let plan = ladder_plan();
        let order = decoding_order(&plan);
        let total: usize = plan
            .slots()
            .map(|(m, i)| order.weaker_set(m, i).len())
            .sum();
        // Sum over a strict total order of 2M users: C(2M, 2).
        assert_eq!(total, 4 * 3 / 2);
    }

    #[test]
    fn sinr_matches_hand_arithmetic() {
        // Own gain 4 (|2|^2), interferer gain 1, noise 0.1.
        let det = DetectionMatrix {
            rows: vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]],
        };
        let plan = plan_from_effective(vec![
            [
                vec![c(2.0, 0.0), c(0.0, 0.0)],
                vec![c(1.0, 0.0), c(0.0, 0.0)],
            ],
            [
                vec![c(0.0, 0.0), c(3.0, 0.0)],
                vec![c(0.0, 0.0), c(0.5, 0.0)],
            ],
        ]);
        let cfg = simple_cfg();
        let gains = GainTable::build(&det, &plan, &cfg);
        let map = InterferenceMap::new(
            vec![[vec![(0, 1)], vec![]], [vec![], vec![]]],
            1.0,
        );
        let power = PowerAllocation {
            p: vec![[0.5, 0.3], [0.1, 0.1]],
        };
        let got = sinr(&gains, &map, &power, 0, 0);
        assert!((got - 4.0 * 0.5 / (1.0 * 0.3 + 0.1)).abs() < 1e-12);
        assert!((rate(got, 1.0) - (1.0f64 + 5.0).log2()).abs() < 1e-12);
    }

    #[test]
    fn sinr_matches_direct_summation_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let m_beams = 3usize;
            let effective: Vec<[Vec<Complex<f64>>; 2]> = (0..m_beams)
                .map(|_| {
                    [0, 1].map(|_| {
                        (0..m_beams)
                            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                            .collect()
                    })
                })
                .collect();
            let plan = plan_from_effective(effective.clone());
            let det = DetectionMatrix {
                rows: (0..m_beams)
                    .map(|_| {
                        (0..m_beams)
                            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                            .collect()
                    })
                    .collect(),
            };
            let cfg = SystemConfig::<f64> {
                n_antennas: m_beams,
                n_rf: m_beams,
                codebook_size: m_beams,
                noise_power: 0.05,
                ..SystemConfig::default()
            };
            let gains = GainTable::build(&det, &plan, &cfg);
            let order = decoding_order(&plan);
            let map = InterferenceMap::global_sic(&order, m_beams);
            let power = PowerAllocation {
                p: (0..m_beams)
                    .map(|_| [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
                    .collect(),
            };
            for (m, i) in plan.slots() {
                let num =
                    row_dot(det.row(m), &effective[m][i]).norm_sqr() * power.get(m, i);
                let mut den = cfg.noise_power;
                for &(j, l) in map.set(m, i) {
                    den += row_dot(det.row(m), &effective[j][l]).norm_sqr() * power.get(j, l);
                }
                assert!((sinr(&gains, &map, &power, m, i) - num / den).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn power_and_efficiency_arithmetic() {
        let cfg = SystemConfig::<f64>::default();
        // xi * 0.038 = 0.1 exactly for xi = 1/0.38.
        let tp = total_power(&cfg, 0.038);
        assert!((tp - 0.2).abs() < 1e-12);
        assert!((energy_efficiency(rate(3.0, 1.0), tp) - 10.0).abs() < 1e-10);
    }

    #[test]
    fn zf_on_identity_strong_channels_is_identity() {
        let plan = plan_from_effective(vec![
            [
                vec![c(1.0, 0.0), c(0.0, 0.0)],
                vec![c(0.3, 0.0), c(0.1, 0.0)],
            ],
            [
                vec![c(0.0, 0.0), c(1.0, 0.0)],
                vec![c(0.1, 0.0), c(0.2, 0.0)],
            ],
        ]);
        let det = zf_detection(&plan).unwrap();
        for m in 0..2 {
            for cidx in 0..2 {
                let want = if m == cidx { 1.0 } else { 0.0 };
                assert!((det.row(m)[cidx] - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zf_nulls_other_strong_users_and_normalizes() {
        let effective = vec![
            [
                vec![c(1.2, 0.3), c(-0.4, 0.8)],
                vec![c(0.5, -0.1), c(0.2, 0.2)],
            ],
            [
                vec![c(-0.3, 0.9), c(1.0, -0.5)],
                vec![c(0.1, 0.4), c(-0.6, 0.0)],
            ],
        ];
        let plan = plan_from_effective(effective);
        let det = zf_detection(&plan).unwrap();
        for m in 0..2 {
            for j in 0..2 {
                let dot = row_dot(det.row(m), plan.effective(j, 0));
                if m == j {
                    assert!(dot.norm() > 1e-6);
                } else {
                    assert!(dot.norm() < 1e-12, "row {m} must null strong user {j}");
                }
            }
            // Identity combiner in the synthetic plan: ||v W|| = ||v|| = 1.
            let through = plan.combiner.row_vec_mul(det.row(m));
            assert!((norm2(&through) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zf_rejects_degenerate_strong_channels() {
        let col = vec![c(1.0, 0.0), c(0.5, 0.0)];
        let plan = plan_from_effective(vec![
            [col.clone(), vec![c(0.1, 0.0), c(0.0, 0.0)]],
            [col, vec![c(0.0, 0.0), c(0.1, 0.0)]],
        ]);
        match zf_detection(&plan) {
            Err(Error::DegenerateChannel { .. }) => {}
            other => panic!("expected degenerate channel, got {other:?}"),
        }
    }

    #[test]
    fn zf_sinr_counts_only_weaker_weak_users() {
        let plan = ladder_plan();
        let order = decoding_order(&plan);
        let det = zf_detection(&plan).unwrap();
        let cfg = simple_cfg();
        let gains = GainTable::build(&det, &plan, &cfg);
        let power = PowerAllocation::uniform(2, 0.4);
        let got = zf_sinr(&gains, &order, &power);
        // Strong user of beam 0 (global rank 0) hears both weak users.
        let den00 = gains.g[0][0][1] * 0.4 + gains.g[0][1][1] * 0.4 + cfg.noise_power;
        assert!((got[0][0] - gains.own(0, 0) * 0.4 / den00).abs() < 1e-12);
        // Weak user of beam 0 (rank 2) hears only the weaker weak user (1,1).
        let den01 = gains.g[0][1][1] * 0.4 + cfg.noise_power;
        assert!((got[0][1] - gains.own(0, 1) * 0.4 / den01).abs() < 1e-12);
        // The weakest user (1,1) is interference free.
        assert!((got[1][1] - gains.own(1, 1) * 0.4 / cfg.noise_power).abs() < 1e-12);
    }

    #[test]
    fn min_power_fill_matches_the_triangular_chain() {
        let plan = ladder_plan();
        let order = decoding_order(&plan);
        let det = zf_detection(&plan).unwrap();
        let mut cfg = simple_cfg();
        cfg.r_min = 0.5;
        cfg.p_max = 100.0;
        let gains = GainTable::build(&det, &plan, &cfg);
        let map = InterferenceMap::zf_weak(&order, 2);
        let fill = min_power_fill(&gains, &map, &cfg, 0.0).unwrap();
        let f = cfg.min_rate_factor(1.0);
        // Walk the global order weakest-first and accumulate by hand.
        let mut expect: Vec<[f64; 2]> = vec![[0.0; 2]; 2];
        for &(m, i) in order.order().iter().rev() {
            let mut den = cfg.noise_power;
            for &(j, l) in map.set(m, i) {
                den += gains.g[m][j][l] * expect[j][l];
            }
            expect[m][i] = f * den / gains.own(m, i);
        }
        for (m, i) in plan.slots() {
            assert!(
                (fill.get(m, i) - expect[m][i]).abs() < 1e-10,
                "slot ({m},{i})"
            );
        }
        // The floor holds with equality under the fill.
        for (m, i) in plan.slots() {
            let s = sinr(&gains, &map, &fill, m, i);
            assert!((s - f).abs() < 1e-8);
        }
    }

    #[test]
    fn min_power_fill_detects_infeasibility() {
        let plan = ladder_plan();
        let order = decoding_order(&plan);
        let det = zf_detection(&plan).unwrap();
        let mut cfg = simple_cfg();
        cfg.r_min = 0.5;
        cfg.p_max = 1e-6; // far below the noise-driven requirement
        let gains = GainTable::build(&det, &plan, &cfg);
        let map = InterferenceMap::zf_weak(&order, 2);
        assert!(matches!(
            min_power_fill(&gains, &map, &cfg, 0.0),
            Err(Error::Infeasible)
        ));
    }

    #[test]
    fn exact_noise_matches_nominal_after_zf_normalization() {
        let plan = ladder_plan();
        let det = zf_detection(&plan).unwrap();
        let mut cfg = simple_cfg();
        let nominal = GainTable::build(&det, &plan, &cfg);
        cfg.exact_noise = true;
        let exact = GainTable::build(&det, &plan, &cfg);
        for m in 0..2 {
            assert!((nominal.noise[m] - exact.noise[m]).abs() < 1e-12);
        }
    }

    #[test]
    fn solution_assembly_reports_the_min_quantities() {
        let plan = ladder_plan();
        let order = decoding_order(&plan);
        let det = zf_detection(&plan).unwrap();
        let cfg = simple_cfg();
        let map = InterferenceMap::zf_weak(&order, 2);
        let power = PowerAllocation::uniform(2, 0.2);
        let sol = Solution::assemble(
            0.0,
            &plan,
            &map,
            &cfg,
            det,
            power,
            Counters::default(),
            Traces::default(),
        );
        let min_rate = sol
            .rates
            .iter()
            .flat_map(|p| p.iter())
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert_eq!(sol.min_rate, min_rate);
        assert!((sol.z_value - sol.min_rate).abs() < 1e-12, "eta = 0");
        assert!(sol.min_ee <= sol.ee[0][0]);
    }
}
