//! Log-barrier interior-point solver for the constraint catalog.
//!
//! Maximizing `x[obj]` under concave `c_i(x) >= 0` is run as a sequence
//! of damped-Newton minimizations of `phi_t(x) = -t*x[obj] - sum ln c_i(x)`
//! with the barrier weight `t` increased tenfold per stage; `m/t` is the
//! duality-gap certificate. Starts that are not strictly interior go
//! through a phase-I stage that maximizes the negative of a shared slack
//! on the globally defined exp-form constraints, so log domains cannot
//! obstruct the search.

use crate::cvx::{ConstraintExpr, ConvexSubproblem, SolveStatus, Solved};
use crate::linalg::solve_spd;
use crate::scalar::{fl, Scalar};

#[derive(Clone, Debug)]
pub struct BarrierOptions<T> {
    /// Duality-gap target `m/t`.
    pub tol: T,
    /// Barrier weight multiplier per stage.
    pub mu: T,
    /// Initial barrier weight.
    pub t0: T,
    /// Total Newton-step budget per solve.
    pub max_newton: usize,
    /// Newton-decrement-squared threshold ending one stage.
    pub newton_tol: T,
}

impl<T: Scalar> Default for BarrierOptions<T> {
    fn default() -> Self {
        Self {
            tol: fl(1e-6),
            mu: fl(10.0),
            t0: T::one(),
            max_newton: 200,
            newton_tol: fl(1e-10),
        }
    }
}

/// What the Newton engine needs to know about a barrier stage. `Main`
/// reads constraints natively; `PhaseOne` reads them in exp form with a
/// shared slack variable appended as the last coordinate.
enum Stage<'a, T> {
    Main(&'a ConvexSubproblem<T>),
    /// Carries the ceiling placed on the shared slack variable; only the
    /// slack's sign matters, the ceiling just keeps the stage bounded.
    PhaseOne(&'a ConvexSubproblem<T>, T),
}

impl<T: Scalar> Stage<'_, T> {
    fn problem(&self) -> &ConvexSubproblem<T> {
        match self {
            Stage::Main(p) | Stage::PhaseOne(p, _) => p,
        }
    }

    fn n(&self) -> usize {
        match self {
            Stage::Main(p) => p.n_vars,
            Stage::PhaseOne(p, _) => p.n_vars + 1,
        }
    }

    /// Constraint count including the phase-I ceiling on the slack.
    fn m(&self) -> usize {
        match self {
            Stage::Main(p) => p.constraints.len(),
            Stage::PhaseOne(p, _) => p.constraints.len() + 1,
        }
    }

    /// Linear objective to maximize: `x[obj]` or `-s`.
    fn objective(&self, x: &[T]) -> T {
        match self {
            Stage::Main(p) => x[p.objective],
            Stage::PhaseOne(p, _) => -x[p.n_vars],
        }
    }

    fn add_objective_grad(&self, g: &mut [T]) {
        match self {
            Stage::Main(p) => g[p.objective] += T::one(),
            Stage::PhaseOne(p, _) => g[p.n_vars] -= T::one(),
        }
    }

    /// All stage slacks at `x`, or `None` outside a log domain.
    fn slacks(&self, x: &[T]) -> Option<Vec<T>> {
        match self {
            Stage::Main(p) => {
                let mut out = Vec::with_capacity(p.constraints.len());
                for c in &p.constraints {
                    out.push(c.value(x)?);
                }
                Some(out)
            }
            Stage::PhaseOne(p, ceiling) => {
                let s = x[p.n_vars];
                let mut out: Vec<T> = p
                    .constraints
                    .iter()
                    .map(|c| c.exp_value(&x[..p.n_vars]) + s)
                    .collect();
                out.push(*ceiling - s);
                Some(out)
            }
        }
    }

    /// Accumulates the gradient and Hessian of `phi_t` at `x` given the
    /// precomputed slacks.
    fn add_newton_terms(&self, x: &[T], slacks: &[T], t: T, g: &mut [T], h: &mut [T]) {
        let n = self.n();
        let mut grad_c = vec![T::zero(); n];
        let p = self.problem();
        for (ci, c) in p.constraints.iter().enumerate() {
            let s = slacks[ci];
            let inv = T::one() / s;
            for v in grad_c.iter_mut() {
                *v = T::zero();
            }
            match self {
                Stage::Main(_) => c.add_grad(x, T::one(), &mut grad_c),
                Stage::PhaseOne(pp, _) => {
                    c.add_exp_grad(&x[..pp.n_vars], T::one(), &mut grad_c);
                    grad_c[pp.n_vars] += T::one();
                }
            }
            // -(1/s) grad c into the phi gradient.
            for (gi, gc) in g.iter_mut().zip(&grad_c) {
                *gi -= inv * *gc;
            }
            // (1/s^2) grad grad^T.
            let inv2 = inv * inv;
            for r in 0..n {
                let gr = grad_c[r];
                if gr == T::zero() {
                    continue;
                }
                let row = &mut h[r * n..(r + 1) * n];
                for (cc, gcc) in grad_c.iter().enumerate() {
                    row[cc] += inv2 * gr * *gcc;
                }
            }
            // (1/s) * (-hess c): rank-one pieces from the catalog shapes.
            match (&c.expr, self) {
                (ConstraintExpr::QuadraticSlack { squares, .. }, _) => {
                    for sq in squares {
                        let w = fl::<T>(2.0) * sq.weight * inv;
                        sparse_outer(&sq.form.coeffs, w, n, h);
                    }
                }
                (ConstraintExpr::LogAffine { scale, arg, .. }, Stage::Main(_)) => {
                    let a = arg.eval(x);
                    let k = *scale / (T::LN_2() * a * a) * inv;
                    sparse_outer(&arg.coeffs, k, n, h);
                }
                (ConstraintExpr::LogAffine { scale, aff, .. }, Stage::PhaseOne(pp, _)) => {
                    let e = (aff.eval(&x[..pp.n_vars]) / *scale).exp2();
                    let k = (T::LN_2() / *scale) * (T::LN_2() / *scale) * e * inv;
                    sparse_outer(&aff.coeffs, k, n, h);
                }
            }
        }
        // Phase-I slack ceiling: gradient -1 on s, no curvature.
        if let Stage::PhaseOne(pp, _) = self {
            let s = slacks[p.constraints.len()];
            g[pp.n_vars] += T::one() / s;
            h[pp.n_vars * n + pp.n_vars] += T::one() / (s * s);
        }
        // Objective part of phi = -t * objective.
        let mut obj_grad = vec![T::zero(); n];
        self.add_objective_grad(&mut obj_grad);
        for (gi, og) in g.iter_mut().zip(&obj_grad) {
            *gi -= t * *og;
        }
    }

    fn phi(&self, x: &[T], t: T) -> Option<T> {
        let slacks = self.slacks(x)?;
        let mut v = -t * self.objective(x);
        for s in slacks {
            if s <= T::zero() {
                return None;
            }
            v -= s.ln();
        }
        Some(v)
    }
}

fn sparse_outer<T: Scalar>(coeffs: &[(usize, T)], w: T, n: usize, h: &mut [T]) {
    for &(r, cr) in coeffs {
        for &(c, cc) in coeffs {
            h[r * n + c] += w * cr * cc;
        }
    }
}

/// Newton solve with a ridge escalation fallback for marginal Hessians.
fn newton_direction<T: Scalar>(h: &mut [T], g: &[T], n: usize) -> Option<Vec<T>> {
    let rhs: Vec<T> = g.iter().map(|v| -*v).collect();
    if let Some(d) = solve_spd(h, &rhs, n) {
        return Some(d);
    }
    let mut trace = T::zero();
    for i in 0..n {
        trace += h[i * n + i];
    }
    let base = (trace / fl(n as f64)).max(T::one());
    let mut ridge = fl::<T>(1e-12) * base;
    for _ in 0..15 {
        let mut hr = h.to_vec();
        for i in 0..n {
            hr[i * n + i] += ridge;
        }
        if let Some(d) = solve_spd(&hr, &rhs, n) {
            return Some(d);
        }
        ridge *= fl(100.0);
    }
    None
}

struct StageOutcome<T> {
    x: Vec<T>,
    steps: usize,
}

/// Early-exit predicate a stage polls between Newton steps.
type StopEarly<'a, T> = &'a dyn Fn(&[T]) -> bool;

/// Runs the barrier path on one stage from a strictly interior `x0`.
/// `stop_early` may end the run as soon as the current iterate satisfies
/// an external goal (used by phase-I).
fn run_stage<T: Scalar>(
    stage: &Stage<T>,
    x0: Vec<T>,
    opts: &BarrierOptions<T>,
    budget: usize,
    stop_early: Option<StopEarly<T>>,
) -> (StageOutcome<T>, T) {
    // Near-centered iterates gain little from extra polishing, so a stage
    // gives up its remaining steps after this many and lets `t` advance.
    const STAGE_CAP: usize = 60;
    let n = stage.n();
    let m = fl::<T>(stage.m() as f64);
    let mut x = x0;
    let mut t = opts.t0;
    let mut steps = 0usize;
    let mut gap = m / t;
    loop {
        // Inner: damped Newton on phi_t.
        let mut stage_steps = 0usize;
        loop {
            if steps >= budget {
                return (
                    StageOutcome {
                        x,
                        steps,
                    },
                    gap,
                );
            }
            if stage_steps >= STAGE_CAP {
                break;
            }
            if let Some(f) = stop_early {
                if f(&x) {
                    return (
                        StageOutcome {
                            x,
                            steps,
                        },
                        gap,
                    );
                }
            }
            let slacks = match stage.slacks(&x) {
                Some(s) => s,
                None => {
                    return (
                        StageOutcome {
                            x,
                            steps,
                        },
                        gap,
                    )
                }
            };
            let mut g = vec![T::zero(); n];
            let mut h = vec![T::zero(); n * n];
            stage.add_newton_terms(&x, &slacks, t, &mut g, &mut h);
            let d = match newton_direction(&mut h, &g, n) {
                Some(d) => d,
                None => {
                    return (
                        StageOutcome {
                            x,
                            steps,
                        },
                        gap,
                    )
                }
            };
            let slope: T = g.iter().zip(&d).map(|(a, b)| *a * *b).sum();
            let mut phi0 = -t * stage.objective(&x);
            for s in &slacks {
                phi0 -= s.ln();
            }
            // Newton decrement^2 = -g.d for the PSD system. phi_t grows
            // with t, so the threshold scales with it to stay reachable
            // in floating point.
            if -slope / fl(2.0) <= opts.newton_tol * T::one().max(phi0.abs()) {
                break;
            }
            let mut alpha = T::one();
            let mut accepted = false;
            for _ in 0..90 {
                let trial: Vec<T> = x
                    .iter()
                    .zip(&d)
                    .map(|(xi, di)| *xi + alpha * *di)
                    .collect();
                if let Some(phi1) = stage.phi(&trial, t) {
                    if phi1 <= phi0 + fl::<T>(0.25) * alpha * slope {
                        x = trial;
                        accepted = true;
                        break;
                    }
                }
                alpha *= fl(0.5);
            }
            steps += 1;
            stage_steps += 1;
            if !accepted {
                break; // step underflow: numerically stationary
            }
        }
        gap = m / t;
        if gap <= opts.tol {
            return (
                StageOutcome {
                    x,
                    steps,
                },
                gap,
            );
        }
        t *= opts.mu;
    }
}

/// Finds a strictly interior point for `p` starting anywhere, or certifies
/// infeasibility. Interior means every exp-form slack clears
/// `interior_margin`.
fn phase_one<T: Scalar>(
    p: &ConvexSubproblem<T>,
    opts: &BarrierOptions<T>,
    budget: usize,
) -> (Option<Vec<T>>, usize) {
    let margin = fl::<T>(1e-12);
    let mut x0 = p.start.clone();
    x0.push(T::zero());
    // Start the slack above the worst violation and cap it one unit higher.
    let worst = p
        .constraints
        .iter()
        .map(|c| c.exp_value(&p.start))
        .fold(T::infinity(), T::min);
    let mut s0 = T::one() - worst.min(T::zero());
    if !s0.is_finite() {
        s0 = fl(1e9);
    }
    x0[p.n_vars] = s0;
    let stage = Stage::PhaseOne(p, s0 + T::one());
    let goal = move |y: &[T]| {
        p.constraints
            .iter()
            .all(|c| c.exp_value(&y[..p.n_vars]) > margin)
    };
    let (out, _) = run_stage(&stage, x0, opts, budget, Some(&goal));
    let interior = goal(&out.x);
    let steps = out.steps;
    if interior {
        (Some(out.x[..p.n_vars].to_vec()), steps)
    } else {
        (None, steps)
    }
}

/// Solves the subproblem with the log-barrier method. The result carries
/// the final duality gap and the Newton-step count; statuses follow
/// [`SolveStatus`].
pub fn solve<T: Scalar>(p: &ConvexSubproblem<T>, opts: &BarrierOptions<T>) -> Solved<T> {
    if p.constraints.is_empty() {
        return Solved {
            x: p.start.clone(),
            objective: p.start[p.objective],
            status: SolveStatus::Unbounded,
            gap: T::infinity(),
            steps: 0,
        };
    }
    let mut steps_used = 0usize;
    let interior_at = |x: &[T]| match p.min_slack(x) {
        Some(v) => v > T::zero(),
        None => false,
    };
    let x0 = if interior_at(&p.start) {
        p.start.clone()
    } else {
        let (found, s) = phase_one(p, opts, opts.max_newton);
        steps_used += s;
        match found {
            Some(x) => x,
            None => {
                let objective = p.start[p.objective];
                return Solved {
                    x: p.start.clone(),
                    objective,
                    status: SolveStatus::Infeasible,
                    gap: T::infinity(),
                    steps: steps_used,
                };
            }
        }
    };
    let stage = Stage::Main(p);
    let budget = opts.max_newton.saturating_sub(steps_used).max(1);
    let (out, gap) = run_stage(&stage, x0, opts, budget, None);
    steps_used += out.steps;
    let status = if gap <= opts.tol {
        SolveStatus::Optimal
    } else {
        SolveStatus::MaxIter
    };
    Solved {
        objective: out.x[p.objective],
        x: out.x,
        status,
        gap,
        steps: steps_used,
    }
}
