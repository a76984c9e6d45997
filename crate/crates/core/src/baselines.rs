//! Reference decoding schemes for the comparison experiments. Every
//! scheme reuses the same rate kernel and optimization machinery as the
//! proposed solvers; only the interference sets (and for the orthogonal
//! baseline the slot fraction) change.
//!
//! Scheme numbering follows the toolkit's experiment labels: scheme 1 is
//! the joint detection/power solve, scheme 2 the fixed-ZF solve (both in
//! [`crate::maxmin`]), scheme 3 cluster-ordered cancellation, scheme 4
//! cancellation within each pair only, and `oma` the half-slot orthogonal
//! service.

use crate::clustering::BeamPlan;
use crate::config::SystemConfig;
use crate::error::Result;
use crate::maxmin::{bisection_with_map, max_min_rate_with_map, MaxminOptions};
use crate::noma::{
    all_rates, DetectionMatrix, GainTable, InterferenceMap, PowerAllocation, Solution,
};
use crate::scalar::{fl, Scalar};

/// Reference schemes compared against the joint and fixed-ZF solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BaselineScheme {
    /// Cluster-ordered cancellation: clusters are decoded sequentially by
    /// their strong user's effective norm, strong before weak inside each
    /// cluster, and a decoded cluster's signals are removed for everyone
    /// after it.
    Scheme3,
    /// Pair-local cancellation only: a weak user's signal interferes with
    /// every other detection, nothing is removed across clusters.
    Scheme4,
    /// Half-slot orthogonal service: all strong users share one slot and
    /// all weak users the other, without superposition inside a beam.
    Oma,
}

/// Interference sets for cluster-ordered cancellation. Cross-beam strong
/// users are spatially nulled by the zero-forcing rows and never appear;
/// a strong user additionally hears its own cluster's weak user, which is
/// decoded after it.
pub fn scheme3_map<T: Scalar>(plan: &BeamPlan<T>) -> InterferenceMap<T> {
    let m_beams = plan.n_beams();
    let mut order: Vec<usize> = (0..m_beams).collect();
    order.sort_by(|&a, &b| {
        plan.eff_norm2(b, 0)
            .partial_cmp(&plan.eff_norm2(a, 0))
            .expect("effective norms are finite")
    });
    let mut pos = vec![0usize; m_beams];
    for (k, &m) in order.iter().enumerate() {
        pos[m] = k;
    }
    let sets = (0..m_beams)
        .map(|m| {
            let later: Vec<(usize, usize)> = order
                .iter()
                .copied()
                .filter(|&j| pos[j] > pos[m])
                .map(|j| (j, 1))
                .collect();
            let mut strong = Vec::with_capacity(later.len() + 1);
            strong.push((m, 1));
            strong.extend(later.iter().copied());
            [strong, later]
        })
        .collect();
    InterferenceMap::new(sets, T::one())
}

/// Interference sets for pair-local cancellation: every weak user's
/// signal reaches every detection except the decodes of its own pair's
/// cancellation chain (its own slot's desired signal, and nothing else).
pub fn scheme4_map<T: Scalar>(n_beams: usize) -> InterferenceMap<T> {
    let sets = (0..n_beams)
        .map(|m| {
            let strong: Vec<(usize, usize)> = (0..n_beams).map(|j| (j, 1)).collect();
            let weak: Vec<(usize, usize)> = (0..n_beams).filter(|&j| j != m).map(|j| (j, 1)).collect();
            [strong, weak]
        })
        .collect();
    InterferenceMap::new(sets, T::one())
}

/// Interference sets for the half-slot orthogonal baseline: co-active
/// users are the same-index users of the other beams (strong users share
/// one slot, weak users the other), and each slot carries half the rate.
pub fn oma_map<T: Scalar>(n_beams: usize) -> InterferenceMap<T> {
    let sets = (0..n_beams)
        .map(|m| {
            [0, 1].map(|i| {
                (0..n_beams)
                    .filter(|&j| j != m)
                    .map(|j| (j, i))
                    .collect::<Vec<_>>()
            })
        })
        .collect();
    InterferenceMap::new(sets, fl(0.5))
}

pub fn baseline_map<T: Scalar>(scheme: BaselineScheme, plan: &BeamPlan<T>) -> InterferenceMap<T> {
    match scheme {
        BaselineScheme::Scheme3 => scheme3_map(plan),
        BaselineScheme::Scheme4 => scheme4_map(plan.n_beams()),
        BaselineScheme::Oma => oma_map(plan.n_beams()),
    }
}

/// Per-user rates under cluster-ordered cancellation at the given
/// detection matrix and powers.
pub fn scheme3_rates<T: Scalar>(
    det: &DetectionMatrix<T>,
    plan: &BeamPlan<T>,
    cfg: &SystemConfig<T>,
    power: &PowerAllocation<T>,
) -> Vec<[T; 2]> {
    let gains = GainTable::build(det, plan, cfg);
    all_rates(&gains, &scheme3_map(plan), power)
}

/// Per-user rates under pair-local cancellation at the given detection
/// matrix and powers.
pub fn scheme4_rates<T: Scalar>(
    det: &DetectionMatrix<T>,
    plan: &BeamPlan<T>,
    cfg: &SystemConfig<T>,
    power: &PowerAllocation<T>,
) -> Vec<[T; 2]> {
    let gains = GainTable::build(det, plan, cfg);
    all_rates(&gains, &scheme4_map(plan.n_beams()), power)
}

/// Per-user rates under half-slot orthogonal service at the given
/// detection matrix and powers.
pub fn oma_rates<T: Scalar>(
    det: &DetectionMatrix<T>,
    plan: &BeamPlan<T>,
    cfg: &SystemConfig<T>,
    power: &PowerAllocation<T>,
) -> Vec<[T; 2]> {
    let gains = GainTable::build(det, plan, cfg);
    all_rates(&gains, &oma_map(plan.n_beams()), power)
}

/// Max-min EE solve for a reference scheme: the same outer root search
/// and power ascent as the fixed-ZF scheme, under the scheme's sets.
pub fn baseline_ee_solve<T: Scalar>(
    plan: &BeamPlan<T>,
    cfg: &SystemConfig<T>,
    scheme: BaselineScheme,
    opts: &MaxminOptions<T>,
) -> Result<Solution<T>> {
    bisection_with_map(plan, cfg, baseline_map(scheme, plan), opts)
}

/// Max-min rate solve for a reference scheme (single evaluation at
/// `eta = 0`).
pub fn baseline_rate_solve<T: Scalar>(
    plan: &BeamPlan<T>,
    cfg: &SystemConfig<T>,
    scheme: BaselineScheme,
    opts: &MaxminOptions<T>,
) -> Result<Solution<T>> {
    max_min_rate_with_map(plan, cfg, baseline_map(scheme, plan), opts)
}
