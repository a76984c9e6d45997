//! First-order cross-check solver, independent of the barrier method.
//!
//! Augmented Lagrangian over the globally defined exp-form constraint
//! readings: hinge-quadratic penalty terms carry multiplier estimates for
//! every constraint (bounds included), so each inner problem is a smooth
//! unconstrained minimization, handled here by limited-memory BFGS with
//! an Armijo backtracking search. Optimality requires the inner
//! stationarity, the violation target, and a small complementarity
//! residual together; feasibility alone can sit well below the optimum
//! while the multipliers are still converging. Shares no step logic,
//! curvature information, or constraint reading with the barrier path,
//! which is what makes the two-solver agreement check meaningful.

use crate::cvx::{ConvexSubproblem, SolveStatus, Solved};
use crate::scalar::{fl, Scalar};

#[derive(Clone, Debug)]
pub struct FirstOrderOptions<T> {
    /// Constraint-violation target.
    pub ctol: T,
    /// Complementarity-residual target per unit of objective magnitude;
    /// together with `ctol` it bounds how far the reported objective can
    /// sit from the constrained optimum.
    pub comp_tol: T,
    /// Inner stationarity target: infinity norm of the penalized-problem
    /// gradient, relative to the held value's magnitude.
    pub gtol: T,
    pub max_outer: usize,
    /// Inner gradient-iteration budget per outer round.
    pub max_inner: usize,
    /// Initial penalty weight.
    pub rho0: T,
    pub rho_cap: T,
}

impl<T: Scalar> Default for FirstOrderOptions<T> {
    fn default() -> Self {
        Self {
            ctol: fl(1e-8),
            comp_tol: fl(1e-6),
            gtol: fl(1e-8),
            max_outer: 60,
            max_inner: 800,
            rho0: fl(10.0),
            rho_cap: fl(1e10),
        }
    }
}

struct Lagrangian<'a, T> {
    p: &'a ConvexSubproblem<T>,
    lambda: Vec<T>,
    rho: T,
}

impl<T: Scalar> Lagrangian<'_, T> {
    /// Minimized objective: `-x[obj] + sum psi(c_i)` with
    /// `psi(c) = (max(0, lambda - rho*c)^2 - lambda^2) / (2 rho)`.
    fn value(&self, x: &[T]) -> T {
        let mut f = -x[self.p.objective];
        let half = fl::<T>(0.5);
        for (k, cons) in self.p.constraints.iter().enumerate() {
            let c = cons.exp_value(x);
            let hinge = (self.lambda[k] - self.rho * c).max(T::zero());
            f += half * (hinge * hinge - self.lambda[k] * self.lambda[k]) / self.rho;
        }
        f
    }

    fn gradient(&self, x: &[T], g: &mut [T]) {
        for v in g.iter_mut() {
            *v = T::zero();
        }
        g[self.p.objective] = -T::one();
        for (k, cons) in self.p.constraints.iter().enumerate() {
            let c = cons.exp_value(x);
            let hinge = (self.lambda[k] - self.rho * c).max(T::zero());
            if hinge > T::zero() {
                cons.add_exp_grad(x, -hinge, g);
            }
        }
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}

/// One point along a search ray, with the directional derivative there.
struct RayPoint<T> {
    theta: T,
    f: T,
    slope: T,
    x: Vec<T>,
    g: Vec<T>,
}

fn eval_ray<T: Scalar>(lag: &Lagrangian<T>, x: &[T], d: &[T], theta: T) -> RayPoint<T> {
    let x_new: Vec<T> = x.iter().zip(d).map(|(xi, di)| *xi + theta * *di).collect();
    let f = lag.value(&x_new);
    let mut g = vec![T::zero(); x.len()];
    lag.gradient(&x_new, &mut g);
    let slope = dot(&g, d);
    RayPoint {
        theta,
        f,
        slope,
        x: x_new,
        g,
    }
}

/// Wolfe line search (bracket then bisection zoom). Acceptance leans on the
/// curvature condition over the analytic directional derivative, because
/// near a tight minimum the per-step descent falls below what f64 value
/// differences can resolve while gradients stay accurate; an f-difference
/// test alone would stall the quasi-Newton iteration well short of the
/// stationarity target. `noise` is the rounding allowance on value tests.
fn wolfe_search<T: Scalar>(
    lag: &Lagrangian<T>,
    x: &[T],
    d: &[T],
    f0: T,
    slope0: T,
) -> Option<RayPoint<T>> {
    let c1 = fl::<T>(1e-4);
    let c2 = fl::<T>(0.9);
    let noise = fl::<T>(4e-16) * (T::one() + f0.abs());
    let armijo = |p: &RayPoint<T>| p.f <= f0 + c1 * p.theta * slope0 + noise;
    let curv = |p: &RayPoint<T>| p.slope.abs() <= -c2 * slope0;

    let mut lo = RayPoint {
        theta: T::zero(),
        f: f0,
        slope: slope0,
        x: x.to_vec(),
        g: Vec::new(),
    };
    let mut hi: Option<RayPoint<T>> = None;
    let mut theta = T::one();
    for _ in 0..20 {
        let p = eval_ray(lag, x, d, theta);
        if !armijo(&p) || (lo.theta > T::zero() && p.f >= lo.f) {
            hi = Some(p);
            break;
        }
        if curv(&p) {
            return Some(p);
        }
        if p.slope >= T::zero() {
            hi = Some(std::mem::replace(&mut lo, p));
            break;
        }
        theta = p.theta * fl(2.0);
        lo = p;
    }
    let mut hi = hi?;
    for _ in 0..40 {
        let theta = (lo.theta + hi.theta) * fl(0.5);
        let p = eval_ray(lag, x, d, theta);
        if !armijo(&p) || p.f >= lo.f + noise {
            hi = p;
        } else {
            if curv(&p) {
                return Some(p);
            }
            if p.slope * (hi.theta - lo.theta) >= T::zero() {
                hi = std::mem::replace(&mut lo, p);
            } else {
                lo = p;
            }
        }
        if (hi.theta - lo.theta).abs() <= fl::<T>(1e-18) * (T::one() + lo.theta) {
            break;
        }
    }
    // The bracket collapsed before the curvature target; the best interior
    // point still makes valid progress whenever it moved at all.
    if lo.theta > T::zero() {
        Some(lo)
    } else {
        None
    }
}

/// Inner minimization: limited-memory BFGS (two-loop recursion) under the
/// Wolfe search above. Returns iterations used and whether the
/// relative-gradient target was met; a failed search straight along the
/// negative gradient means the surface is flat to machine precision, which
/// also counts as converged.
fn lbfgs<T: Scalar>(lag: &Lagrangian<T>, x: &mut [T], opts: &FirstOrderOptions<T>) -> (usize, bool) {
    const MEMORY: usize = 10;
    let n = x.len();
    let mut f = lag.value(x);
    let mut g = vec![T::zero(); n];
    lag.gradient(x, &mut g);
    let mut s_hist: Vec<Vec<T>> = Vec::new();
    let mut y_hist: Vec<Vec<T>> = Vec::new();
    for iter in 0..opts.max_inner {
        let gmax = g.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        if gmax <= opts.gtol * (T::one() + f.abs()) {
            return (iter, true);
        }
        let mut d: Vec<T> = g.iter().map(|v| -*v).collect();
        let k = s_hist.len();
        let mut alphas = vec![T::zero(); k];
        for j in (0..k).rev() {
            let inv = T::one() / dot(&y_hist[j], &s_hist[j]);
            alphas[j] = inv * dot(&s_hist[j], &d);
            let a = alphas[j];
            for (di, yi) in d.iter_mut().zip(&y_hist[j]) {
                *di -= a * *yi;
            }
        }
        if k > 0 {
            let gamma = dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1]);
            for di in d.iter_mut() {
                *di *= gamma;
            }
        }
        for j in 0..k {
            let inv = T::one() / dot(&y_hist[j], &s_hist[j]);
            let b = inv * dot(&y_hist[j], &d);
            let a = alphas[j] - b;
            for (di, si) in d.iter_mut().zip(&s_hist[j]) {
                *di += a * *si;
            }
        }
        let mut slope = dot(&g, &d);
        if !(slope < T::zero()) {
            // Curvature memory produced a non-descent (or NaN) direction;
            // restart from steepest descent.
            s_hist.clear();
            y_hist.clear();
            d = g.iter().map(|v| -*v).collect();
            slope = dot(&g, &d);
            if !(slope < T::zero()) {
                return (iter, false);
            }
        }
        let step = match wolfe_search(lag, x, &d, f, slope) {
            Some(p) => p,
            None => {
                if s_hist.is_empty() {
                    return (iter, true);
                }
                s_hist.clear();
                y_hist.clear();
                continue;
            }
        };
        let s: Vec<T> = step.x.iter().zip(x.iter()).map(|(a, b)| *a - *b).collect();
        let y: Vec<T> = step.g.iter().zip(&g).map(|(a, b)| *a - *b).collect();
        let sy = dot(&s, &y);
        if sy > fl::<T>(1e-12) * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if s_hist.len() == MEMORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
        }
        x.copy_from_slice(&step.x);
        g = step.g;
        f = step.f;
    }
    (opts.max_inner, false)
}

/// Solves the subproblem by the augmented-Lagrangian method. `gap`
/// reports the final max constraint violation.
pub fn solve<T: Scalar>(p: &ConvexSubproblem<T>, opts: &FirstOrderOptions<T>) -> Solved<T> {
    let mut lag = Lagrangian {
        p,
        lambda: vec![T::zero(); p.constraints.len()],
        rho: opts.rho0,
    };
    let mut x = p.start.clone();
    let mut steps = 0usize;
    let mut viol_prev = T::infinity();
    for _ in 0..opts.max_outer {
        let (used, stationary) = lbfgs(&lag, &mut x, opts);
        steps += used;
        // First-order multiplier update; the updated multipliers are the
        // hinge weights active in the inner gradient, i.e. the KKT
        // candidates certified by `stationary`.
        let mut viol = T::zero();
        let mut comp = T::zero();
        for (k, cons) in p.constraints.iter().enumerate() {
            let c = cons.exp_value(&x);
            viol = viol.max(-c);
            lag.lambda[k] = (lag.lambda[k] - lag.rho * c).max(T::zero());
            comp += lag.lambda[k] * c.abs();
        }
        let scale = T::one() + x[p.objective].abs();
        if std::env::var_os("FO_DEBUG").is_some() {
            let mut g = vec![T::zero(); x.len()];
            lag.gradient(&x, &mut g);
            let gmax = g.iter().fold(T::zero(), |a, v| a.max(v.abs()));
            eprintln!(
                "outer rho={:.1e} used={used} stat={stationary} viol={:.2e} comp={:.2e} gmax={:.2e} obj={:.8e}",
                lag.rho, viol, comp, gmax, x[p.objective]
            );
        }
        if stationary && viol <= opts.ctol && comp <= opts.comp_tol * scale {
            return Solved {
                objective: x[p.objective],
                x,
                status: SolveStatus::Optimal,
                gap: viol,
                steps,
            };
        }
        // Grow the penalty only while infeasible; once inside the target
        // band, machine-noise fluctuations in `viol` must not escalate rho,
        // or the inner surface turns too stiff to certify stationarity.
        if viol > opts.ctol && viol > fl::<T>(0.25) * viol_prev {
            if lag.rho >= opts.rho_cap && viol >= viol_prev * fl(0.999) {
                return Solved {
                    objective: x[p.objective],
                    x,
                    status: SolveStatus::Infeasible,
                    gap: viol,
                    steps,
                };
            }
            lag.rho = (lag.rho * fl(10.0)).min(opts.rho_cap);
        }
        viol_prev = viol;
    }
    Solved {
        objective: x[p.objective],
        x,
        status: SolveStatus::MaxIter,
        gap: viol_prev,
        steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvx::{barrier, Constraint, ConstraintExpr, ConstraintKind, LinearForm, SquareTerm};

    fn affine(idx: usize, coeff: f64, constant: f64, kind: ConstraintKind) -> Constraint<f64> {
        Constraint {
            kind,
            expr: ConstraintExpr::QuadraticSlack {
                aff: LinearForm::single(idx, coeff, constant),
                squares: vec![],
            },
            label: format!("aff{idx}"),
        }
    }

    #[test]
    fn cap_and_box_problems_match_closed_forms() {
        let cap = ConvexSubproblem {
            n_vars: 1,
            objective: 0,
            constraints: vec![affine(0, -1.0, 3.0, ConstraintKind::Affine)],
            var_names: vec!["z".into()],
            start: vec![0.0],
        };
        let sol = solve(&cap, &FirstOrderOptions::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 3.0).abs() < 1e-6, "got {}", sol.objective);

        let boxed = ConvexSubproblem {
            n_vars: 1,
            objective: 0,
            constraints: vec![
                affine(0, 1.0, 0.0, ConstraintKind::Box),
                affine(0, -1.0, 0.7, ConstraintKind::Box),
            ],
            var_names: vec!["p".into()],
            start: vec![0.1],
        };
        let sol = solve(&boxed, &FirstOrderOptions::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 0.7).abs() < 1e-6, "got {}", sol.objective);
    }

    #[test]
    fn log_and_quadratic_constraints_agree_with_barrier() {
        let p = ConvexSubproblem::<f64> {
            n_vars: 2,
            objective: 1,
            constraints: vec![
                Constraint {
                    kind: ConstraintKind::LogRate,
                    expr: ConstraintExpr::LogAffine {
                        scale: 1.0,
                        arg: LinearForm::single(0, 1.0, 1.0),
                        aff: LinearForm::single(1, 1.0, 0.0),
                    },
                    label: "rate".into(),
                },
                Constraint {
                    kind: ConstraintKind::NormBall,
                    expr: ConstraintExpr::QuadraticSlack {
                        aff: LinearForm::constant(9.0),
                        squares: vec![SquareTerm {
                            weight: 1.0,
                            form: LinearForm::single(0, 1.0, 0.0),
                        }],
                    },
                    label: "t^2<=9".into(),
                },
                affine(0, 1.0, 0.0, ConstraintKind::Box),
            ],
            var_names: vec!["t".into(), "z".into()],
            start: vec![1.0, 0.0],
        };
        let fo = solve(&p, &FirstOrderOptions::default());
        let ba = barrier::solve(&p, &barrier::BarrierOptions::default());
        assert_eq!(fo.status, SolveStatus::Optimal);
        assert_eq!(ba.status, SolveStatus::Optimal);
        assert!((fo.objective - 2.0).abs() < 1e-5, "got {}", fo.objective);
        let denom = fo.objective.abs().max(1.0);
        assert!((fo.objective - ba.objective).abs() / denom < 1e-4);
    }

    #[test]
    fn infeasible_caps_are_flagged() {
        let p = ConvexSubproblem::<f64> {
            n_vars: 1,
            objective: 0,
            constraints: vec![
                affine(0, -1.0, 3.0, ConstraintKind::Affine), // z <= 3
                affine(0, 1.0, -5.0, ConstraintKind::Affine), // z >= 5
            ],
            var_names: vec!["z".into()],
            start: vec![0.0],
        };
        let sol = solve(&p, &FirstOrderOptions::default());
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert!(sol.gap > 0.1);
    }
}
