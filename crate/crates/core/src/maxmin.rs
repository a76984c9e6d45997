//! Max-min energy-efficiency drivers: the outer root search over the
//! efficiency parameter `eta` and the inner ascent loops that alternate
//! detection and power updates (joint scheme) or iterate power only under
//! a fixed zero-forcing detection (ZF scheme).
//!
//! The outer search exploits that `L(eta) = max-min [rate - eta * Ptot]`
//! is strictly decreasing with a unique zero at the max-min energy
//! efficiency, so interval halving on a bracket `L(lo) >= 0 > L(hi)`
//! converges to it. Every evaluated allocation certifies its own min-EE
//! as a lower bound on the optimum, which lets the bracket's lower edge
//! jump ahead of plain halving without ever breaking the invariant.

use crate::clustering::BeamPlan;
use crate::config::SystemConfig;
use crate::cvx::barrier::{self, BarrierOptions};
use crate::cvx::builders::{
    build_detection_subproblem, build_power_subproblem, DetectionExpansion, DetectionLayout,
    PowerLayout,
};
use crate::cvx::SolveStatus;
use crate::error::{Error, Result};
use crate::linalg::inner;
use crate::noma::{
    all_rates, decoding_order, energy_efficiency, min_power_fill, sinr, total_power, zf_detection,
    Counters, DetectionMatrix, GainTable, InterferenceMap, PowerAllocation, Solution, Traces,
};
use crate::scalar::{fl, Scalar};

/// Which inner solver the outer search drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaxminScheme {
    /// Alternate detection-matrix and power ascent steps (scheme 1).
    Joint,
    /// Zero-forcing detection held fixed, power-only ascent (scheme 2).
    ZfFixed,
}

/// Tunables for the nested loops.
#[derive(Clone, Debug)]
pub struct MaxminOptions<T> {
    /// Outer stopping threshold on `|L(eta)|`.
    pub epsilon: T,
    /// Objective-change threshold (relative above 1, absolute below)
    /// ending the inner loops.
    pub inner_tol: T,
    pub max_bisection: usize,
    pub max_alternations: usize,
    /// Re-expansion rounds per detection-step call.
    pub max_detection_rounds: usize,
    /// Re-expansion rounds per power-step call.
    pub max_power_rounds: usize,
    /// Lift the bracket's lower edge to each evaluation's achieved min-EE
    /// (a certified lower bound on the optimum). Plain interval halving
    /// when false.
    pub lift_lower: bool,
    pub barrier: BarrierOptions<T>,
}

impl<T: Scalar> Default for MaxminOptions<T> {
    fn default() -> Self {
        Self {
            epsilon: fl(1e-3),
            inner_tol: fl(1e-5),
            max_bisection: 60,
            max_alternations: 30,
            max_detection_rounds: 15,
            max_power_rounds: 15,
            lift_lower: true,
            barrier: BarrierOptions::default(),
        }
    }
}

/// `min over users of [rate - eta' * (Pc + xi * P)]` in exact arithmetic;
/// all acceptance/rejection logic runs on this, never on solver output.
pub fn objective_z<T: Scalar>(
    gains: &GainTable<T>,
    map: &InterferenceMap<T>,
    cfg: &SystemConfig<T>,
    power: &PowerAllocation<T>,
    eta_prime: T,
) -> T {
    let rates = all_rates(gains, map, power);
    let mut z = T::infinity();
    for (m, pair) in rates.iter().enumerate() {
        for (i, &r) in pair.iter().enumerate() {
            z = z.min(r - eta_prime * total_power(cfg, power.get(m, i)));
        }
    }
    z
}

fn achieved_min_ee<T: Scalar>(
    gains: &GainTable<T>,
    map: &InterferenceMap<T>,
    cfg: &SystemConfig<T>,
    power: &PowerAllocation<T>,
) -> T {
    let rates = all_rates(gains, map, power);
    let mut e = T::infinity();
    for (m, pair) in rates.iter().enumerate() {
        for (i, &r) in pair.iter().enumerate() {
            e = e.min(energy_efficiency(r, total_power(cfg, power.get(m, i))));
        }
    }
    e
}

/// One detection-matrix ascent call at fixed powers: repeatedly re-expands
/// the product surrogate at the current iterate (so the surrogate is tight
/// there) and solves the convex subproblem, accepting a candidate only if
/// the exact objective does not decrease. Returns the final matrix and its
/// exact objective value, which never falls below the incoming one.
///
/// Errors with [`Error::Infeasible`] when the incoming iterate violates
/// the SINR floor, because then no strictly feasible start exists.
#[allow(clippy::too_many_arguments)]
pub fn optimize_detection<T: Scalar>(
    eta_prime: T,
    plan: &BeamPlan<T>,
    map: &InterferenceMap<T>,
    cfg: &SystemConfig<T>,
    power: &PowerAllocation<T>,
    det: DetectionMatrix<T>,
    opts: &MaxminOptions<T>,
    counters: &mut Counters,
    traces: &mut Traces<T>,
) -> Result<(DetectionMatrix<T>, T)> {
    let mut det = det;
    let gains = GainTable::build(&det, plan, cfg);
    let tau = cfg.sinr_floor(map.slot_fraction);
    if tau > T::zero() {
        for (m, i) in plan.slots() {
            if sinr(&gains, map, power, m, i) < tau * (T::one() - fl(1e-9)) {
                return Err(Error::Infeasible);
            }
        }
    }
    let mut z_cur = objective_z(&gains, map, cfg, power, eta_prime);
    let mut trace = vec![z_cur];
    let mut rounds = 0usize;
    let layout = DetectionLayout::new(plan.n_beams());
    for _ in 0..opts.max_detection_rounds {
        let exp = DetectionExpansion::tangent(&det, plan, map, cfg, power);
        let prob = build_detection_subproblem(cfg, plan, map, eta_prime, power, &exp)?;
        let sol = barrier::solve(&prob, &opts.barrier);
        counters.subproblem_solves += 1;
        counters.newton_steps += sol.steps;
        if sol.status != SolveStatus::Optimal {
            counters.rejected_steps += 1;
            break;
        }
        let cand = layout.unpack_rows(&sol.x);
        let cand_gains = GainTable::build(&cand, plan, cfg);
        let z_new = objective_z(&cand_gains, map, cfg, power, eta_prime);
        if z_new < z_cur {
            counters.rejected_steps += 1;
            break;
        }
        let gain = z_new - z_cur;
        det = cand;
        z_cur = z_new;
        trace.push(z_cur);
        rounds += 1;
        counters.sca_rounds += 1;
        if gain <= opts.inner_tol * T::one().max(z_cur.abs()) {
            break;
        }
    }
    traces.detection_z.push(trace);
    traces.sca_per_call.push(rounds);
    Ok((det, z_cur))
}

/// One power ascent call at fixed detection gains: repeatedly linearizes
/// the subtracted interference log at the current iterate and solves the
/// convex subproblem, accepting a candidate only if the exact objective
/// does not decrease.
///
/// The detection step guarantees only the SINR floor, which is weaker
/// than the product-form floor enforced here, so an incoming point below
/// that floor is first replaced by the least power vector meeting it.
#[allow(clippy::too_many_arguments)]
pub fn optimize_power<T: Scalar>(
    eta_prime: T,
    gains: &GainTable<T>,
    map: &InterferenceMap<T>,
    cfg: &SystemConfig<T>,
    power: PowerAllocation<T>,
    opts: &MaxminOptions<T>,
    counters: &mut Counters,
    traces: &mut Traces<T>,
) -> Result<(PowerAllocation<T>, T)> {
    let mut power = power;
    let floor = cfg.min_rate_factor(map.slot_fraction);
    if floor > T::zero() && !meets_product_floor(gains, map, &power, floor) {
        power = min_power_fill(gains, map, cfg, fl(1e-2))?;
    }
    let mut z_cur = objective_z(gains, map, cfg, &power, eta_prime);
    let mut trace = vec![z_cur];
    let mut rounds = 0usize;
    let layout = PowerLayout::new(map.n_beams());
    for _ in 0..opts.max_power_rounds {
        let prob = build_power_subproblem(cfg, gains, map, eta_prime, &power);
        let sol = barrier::solve(&prob, &opts.barrier);
        counters.subproblem_solves += 1;
        counters.newton_steps += sol.steps;
        if sol.status != SolveStatus::Optimal {
            counters.rejected_steps += 1;
            break;
        }
        let cand = layout.unpack_powers(&sol.x);
        let z_new = objective_z(gains, map, cfg, &cand, eta_prime);
        if z_new < z_cur {
            counters.rejected_steps += 1;
            break;
        }
        let gain = z_new - z_cur;
        power = cand;
        z_cur = z_new;
        trace.push(z_cur);
        rounds += 1;
        counters.cccp_rounds += 1;
        if gain <= opts.inner_tol * T::one().max(z_cur.abs()) {
            break;
        }
    }
    traces.power_z.push(trace);
    traces.cccp_per_call.push(rounds);
    Ok((power, z_cur))
}

fn meets_product_floor<T: Scalar>(
    gains: &GainTable<T>,
    map: &InterferenceMap<T>,
    power: &PowerAllocation<T>,
    floor: T,
) -> bool {
    let slack = T::one() - fl::<T>(1e-9);
    for m in 0..map.n_beams() {
        for i in 0..2 {
            let mut den = gains.noise[m];
            for &(j, l) in map.set(m, i) {
                den += gains.g[m][j][l] * power.get(j, l);
            }
            if gains.own(m, i) * power.get(m, i) < floor * den * slack {
                return false;
            }
        }
    }
    true
}

/// Warm-startable evaluator for `L(eta)`: holds the current allocation and
/// improves it in place at each requested `eta`, so consecutive
/// evaluations continue from the previous optimum instead of restarting.
pub struct LEvaluator<'a, T: Scalar> {
    plan: &'a BeamPlan<T>,
    cfg: &'a SystemConfig<T>,
    scheme: MaxminScheme,
    opts: MaxminOptions<T>,
    map: InterferenceMap<T>,
    det: DetectionMatrix<T>,
    gains: GainTable<T>,
    power: PowerAllocation<T>,
    init_det: DetectionMatrix<T>,
    init_power: PowerAllocation<T>,
    counters: Counters,
    traces: Traces<T>,
}

impl<'a, T: Scalar> LEvaluator<'a, T> {
    /// Starts from the zero-forcing detection matrix with full transmit
    /// power, falling back to the least power meeting the rate floor when
    /// full power violates it. Errors with [`Error::Infeasible`] when not
    /// even that exists (the caller should reject the drop).
    pub fn new(
        plan: &'a BeamPlan<T>,
        cfg: &'a SystemConfig<T>,
        scheme: MaxminScheme,
        opts: MaxminOptions<T>,
    ) -> Result<Self> {
        let order = decoding_order(plan);
        let map = match scheme {
            MaxminScheme::Joint => InterferenceMap::global_sic(&order, plan.n_beams()),
            MaxminScheme::ZfFixed => InterferenceMap::zf_weak(&order, plan.n_beams()),
        };
        Self::from_map(plan, cfg, scheme, map, opts)
    }

    /// Power-only evaluator under a caller-supplied interference map (the
    /// detection matrix stays zero-forcing); used by the reference schemes,
    /// which differ from the fixed-ZF solve only in their sets.
    pub fn with_map(
        plan: &'a BeamPlan<T>,
        cfg: &'a SystemConfig<T>,
        map: InterferenceMap<T>,
        opts: MaxminOptions<T>,
    ) -> Result<Self> {
        Self::from_map(plan, cfg, MaxminScheme::ZfFixed, map, opts)
    }

    fn from_map(
        plan: &'a BeamPlan<T>,
        cfg: &'a SystemConfig<T>,
        scheme: MaxminScheme,
        map: InterferenceMap<T>,
        opts: MaxminOptions<T>,
    ) -> Result<Self> {
        let det = zf_detection(plan)?;
        let gains = GainTable::build(&det, plan, cfg);
        let floor = cfg.min_rate_factor(map.slot_fraction) * (T::one() + fl(1e-3));
        let full = PowerAllocation::uniform(plan.n_beams(), cfg.p_max);
        let power = if floor <= T::zero() || meets_product_floor(&gains, &map, &full, floor) {
            full
        } else {
            min_power_fill(&gains, &map, cfg, fl(1e-2))?
        };
        Ok(Self {
            plan,
            cfg,
            scheme,
            opts,
            map,
            init_det: det.clone(),
            init_power: power.clone(),
            det,
            gains,
            power,
            counters: Counters::default(),
            traces: Traces::default(),
        })
    }

    pub fn map(&self) -> &InterferenceMap<T> {
        &self.map
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn traces(&self) -> &Traces<T> {
        &self.traces
    }

    /// Min-EE achieved by the current allocation. Feasible allocations
    /// certify `L(min_ee) >= 0`, so this is always a valid lower bracket
    /// edge for the outer search.
    pub fn min_ee(&self) -> T {
        achieved_min_ee(&self.gains, &self.map, self.cfg, &self.power)
    }

    /// Warm starts help at nearby `eta` values but can carry the iterate
    /// into a basin the local ascent cannot leave; when the untouched
    /// initial state scores higher at this `eta`, restart from it.
    fn reanchor(&mut self, eta_prime: T) {
        let warm = objective_z(&self.gains, &self.map, self.cfg, &self.power, eta_prime);
        let init_gains = GainTable::build(&self.init_det, self.plan, self.cfg);
        let init = objective_z(&init_gains, &self.map, self.cfg, &self.init_power, eta_prime);
        if init > warm {
            self.det = self.init_det.clone();
            self.gains = init_gains;
            self.power = self.init_power.clone();
        }
    }

    /// Improves the held allocation for the objective at `eta_prime` and
    /// returns the exact objective value reached.
    pub fn evaluate(&mut self, eta_prime: T) -> Result<T> {
        self.reanchor(eta_prime);
        match self.scheme {
            MaxminScheme::Joint => self.evaluate_joint(eta_prime),
            MaxminScheme::ZfFixed => {
                let (power, z) = optimize_power(
                    eta_prime,
                    &self.gains,
                    &self.map,
                    self.cfg,
                    self.power.clone(),
                    &self.opts,
                    &mut self.counters,
                    &mut self.traces,
                )?;
                self.power = power;
                Ok(z)
            }
        }
    }

    fn evaluate_joint(&mut self, eta_prime: T) -> Result<T> {
        let mut z_cur = objective_z(&self.gains, &self.map, self.cfg, &self.power, eta_prime);
        let mut merged = vec![z_cur];
        let mut rounds = 0usize;
        for _ in 0..self.opts.max_alternations {
            let round_start = z_cur;
            let (det, z_det) = optimize_detection(
                eta_prime,
                self.plan,
                &self.map,
                self.cfg,
                &self.power,
                self.det.clone(),
                &self.opts,
                &mut self.counters,
                &mut self.traces,
            )?;
            self.det = det;
            self.gains = GainTable::build(&self.det, self.plan, self.cfg);
            z_cur = z_cur.max(z_det);
            let (power, z_pow) = optimize_power(
                eta_prime,
                &self.gains,
                &self.map,
                self.cfg,
                self.power.clone(),
                &self.opts,
                &mut self.counters,
                &mut self.traces,
            )?;
            rounds += 1;
            self.counters.alternation_rounds += 1;
            if z_pow < z_cur {
                // The power step lost ground (possible only through its
                // floor restoration); keep the stronger allocation.
                self.counters.rejected_steps += 1;
                merged.push(z_cur);
                break;
            }
            self.power = power;
            z_cur = z_pow;
            merged.push(z_cur);
            if z_cur - round_start <= self.opts.inner_tol * T::one().max(z_cur.abs()) {
                break;
            }
        }
        self.traces.alternation_z = merged;
        self.traces.alternations_per_eval.push(rounds);
        Ok(z_cur)
    }

    /// Strict upper bound on the achievable min-EE: no user can beat its
    /// interference-free efficiency, and with the unit detection row norm
    /// the own-signal gain cannot exceed the projection gain
    /// `hbar^H (W W^H)^{-1} hbar` (for the fixed-ZF scheme, its actual
    /// detection gain). The per-user one-variable rate/power ratio is
    /// unimodal, so a ternary search pins each user's cap.
    pub fn eta_upper_bound(&self) -> Result<T> {
        let rho = self.map.slot_fraction;
        let mut bound = T::infinity();
        match self.scheme {
            MaxminScheme::Joint => {
                let gram = self.plan.combiner.mul(&self.plan.combiner.hermitian());
                let inv = gram.inverse()?;
                for (m, i) in self.plan.slots() {
                    let h = self.plan.effective(m, i);
                    let g = inner(h, &inv.mul_vec(h)).re;
                    bound = bound.min(interference_free_cap(g, self.cfg.noise_power, self.cfg, rho));
                }
            }
            MaxminScheme::ZfFixed => {
                for (m, i) in self.plan.slots() {
                    let g = self.gains.own(m, i);
                    bound = bound.min(interference_free_cap(g, self.gains.noise[m], self.cfg, rho));
                }
            }
        }
        Ok(bound * (T::one() + fl(1e-3)) + fl(1e-9))
    }

    /// Packages the held allocation with the accumulated diagnostics.
    pub fn into_solution(self, eta: T) -> Solution<T> {
        Solution::assemble(
            eta,
            self.plan,
            &self.map,
            self.cfg,
            self.det,
            self.power,
            self.counters,
            self.traces,
        )
    }
}

/// Largest efficiency a lone user with own-signal gain `g` can reach:
/// `max over p of rho * log2(1 + g p / noise) / (Pc + xi p)`.
fn interference_free_cap<T: Scalar>(g: T, noise: T, cfg: &SystemConfig<T>, rho: T) -> T {
    if g <= T::zero() {
        return T::zero();
    }
    let f = |p: T| {
        let r = rho * (T::one() + g * p / noise).log2();
        r / (cfg.circuit_power + cfg.amp_inefficiency * p)
    };
    let mut lo = T::zero();
    let mut hi = cfg.p_max;
    for _ in 0..200 {
        let third = (hi - lo) / fl::<T>(3.0);
        let m1 = lo + third;
        let m2 = hi - third;
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    f(lo).max(f(hi)).max(f(cfg.p_max))
}

/// One-shot `L(eta')` evaluation from a fresh start. Returns the exact
/// objective value and the solution that achieves it.
pub fn evaluate_l<T: Scalar>(
    eta_prime: T,
    plan: &BeamPlan<T>,
    cfg: &SystemConfig<T>,
    scheme: MaxminScheme,
    opts: &MaxminOptions<T>,
) -> Result<(T, Solution<T>)> {
    let mut ev = LEvaluator::new(plan, cfg, scheme, opts.clone())?;
    let z = ev.evaluate(eta_prime)?;
    Ok((z, ev.into_solution(eta_prime)))
}

/// Outer root search for `L(eta) = 0`. Halves a certified bracket until
/// the evaluated objective magnitude drops below `opts.epsilon`; with
/// `opts.lift_lower` the lower edge additionally jumps to each
/// evaluation's achieved min-EE. Inner evaluations warm-start from the
/// previous allocation.
///
/// On the rare interval collapse without a small objective, returns the
/// allocation re-evaluated at the certified lower edge with `eta` set to
/// its own min-EE, which satisfies the zero-crossing identity exactly.
pub fn bisection<T: Scalar>(
    plan: &BeamPlan<T>,
    cfg: &SystemConfig<T>,
    scheme: MaxminScheme,
    opts: &MaxminOptions<T>,
) -> Result<Solution<T>> {
    let ev = LEvaluator::new(plan, cfg, scheme, opts.clone())?;
    bisect_evaluator(ev, opts)
}

/// [`bisection`] over a caller-supplied interference map (power-only
/// inner solves).
pub fn bisection_with_map<T: Scalar>(
    plan: &BeamPlan<T>,
    cfg: &SystemConfig<T>,
    map: InterferenceMap<T>,
    opts: &MaxminOptions<T>,
) -> Result<Solution<T>> {
    let ev = LEvaluator::with_map(plan, cfg, map, opts.clone())?;
    bisect_evaluator(ev, opts)
}

fn bisect_evaluator<T: Scalar>(
    mut ev: LEvaluator<T>,
    opts: &MaxminOptions<T>,
) -> Result<Solution<T>> {
    let mut lo = T::zero();
    let mut hi = ev.eta_upper_bound()?;
    if hi <= lo {
        hi = lo + T::one();
    }
    let half = fl::<T>(0.5);
    for _ in 0..opts.max_bisection {
        let mid = (lo + hi) * half;
        let z = ev.evaluate(mid)?;
        ev.counters.bisection_iters += 1;
        ev.traces.bisection.push((mid, z));
        if z.abs() < opts.epsilon {
            return Ok(ev.into_solution(mid));
        }
        if z > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if opts.lift_lower {
            let e = ev.min_ee();
            if e.is_finite() {
                lo = lo.max(e.min(hi * (T::one() - fl(1e-12))));
            }
        }
        if hi - lo <= T::one().max(hi.abs()) * fl(1e-13) {
            break;
        }
    }
    let z = ev.evaluate(lo)?;
    ev.counters.bisection_iters += 1;
    ev.traces.bisection.push((lo, z));
    let eta = ev.min_ee();
    Ok(ev.into_solution(eta))
}

/// Joint detection/power max-min EE solve (scheme 1).
pub fn scheme1_solve<T: Scalar>(
    plan: &BeamPlan<T>,
    cfg: &SystemConfig<T>,
    opts: &MaxminOptions<T>,
) -> Result<Solution<T>> {
    bisection(plan, cfg, MaxminScheme::Joint, opts)
}

/// Fixed-ZF max-min EE solve (scheme 2).
pub fn scheme2_solve<T: Scalar>(
    plan: &BeamPlan<T>,
    cfg: &SystemConfig<T>,
    opts: &MaxminOptions<T>,
) -> Result<Solution<T>> {
    bisection(plan, cfg, MaxminScheme::ZfFixed, opts)
}

/// Max-min rate solve: a single inner evaluation at `eta = 0`, whose
/// objective reduces to the worst user rate.
pub fn max_min_rate_solve<T: Scalar>(
    plan: &BeamPlan<T>,
    cfg: &SystemConfig<T>,
    scheme: MaxminScheme,
    opts: &MaxminOptions<T>,
) -> Result<Solution<T>> {
    let mut ev = LEvaluator::new(plan, cfg, scheme, opts.clone())?;
    ev.evaluate(T::zero())?;
    Ok(ev.into_solution(T::zero()))
}

/// [`max_min_rate_solve`] over a caller-supplied interference map
/// (power-only inner solves).
pub fn max_min_rate_with_map<T: Scalar>(
    plan: &BeamPlan<T>,
    cfg: &SystemConfig<T>,
    map: InterferenceMap<T>,
    opts: &MaxminOptions<T>,
) -> Result<Solution<T>> {
    let mut ev = LEvaluator::with_map(plan, cfg, map, opts.clone())?;
    ev.evaluate(T::zero())?;
    Ok(ev.into_solution(T::zero()))
}
