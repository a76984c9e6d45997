//! Convex subproblem machinery: a closed catalog of certified-convex
//! constraint shapes, builders for the detection and power subproblems, a
//! purpose-built log-barrier interior-point solver, and an independent
//! first-order solver used as a cross check.
//!
//! Every subproblem is "maximize one coordinate subject to concave
//! constraints c_i(x) >= 0". The catalog admits exactly two expression
//! shapes: an affine functional minus weighted squares of affine forms
//! (covering affine, quadratic-upper, linearized-surrogate, norm-ball and
//! box constraints), and `scale*log2(arg) - aff` with affine `arg`, `aff`
//! (the rate constraints). Both are concave, so the feasible set is
//! convex by construction.

pub mod barrier;
pub mod builders;
pub mod first_order;
pub mod surrogate;

use std::io::Write;

use crate::scalar::{fl, Scalar};

/// Sparse affine functional `constant + sum coeff * x[idx]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearForm<T> {
    pub coeffs: Vec<(usize, T)>,
    pub constant: T,
}

impl<T: Scalar> LinearForm<T> {
    pub fn constant(c: T) -> Self {
        Self {
            coeffs: Vec::new(),
            constant: c,
        }
    }

    pub fn single(idx: usize, coeff: T, constant: T) -> Self {
        Self {
            coeffs: vec![(idx, coeff)],
            constant,
        }
    }

    pub fn push(&mut self, idx: usize, coeff: T) {
        if coeff != T::zero() {
            self.coeffs.push((idx, coeff));
        }
    }

    pub fn eval(&self, x: &[T]) -> T {
        let mut acc = self.constant;
        for &(i, c) in &self.coeffs {
            acc += c * x[i];
        }
        acc
    }

    /// Adds `s * gradient` of the form into `g`.
    pub fn add_scaled(&self, s: T, g: &mut [T]) {
        for &(i, c) in &self.coeffs {
            g[i] += s * c;
        }
    }
}

/// One `weight * form(x)^2` term; weights are nonnegative so the negated
/// sum stays concave.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareTerm<T> {
    pub weight: T,
    pub form: LinearForm<T>,
}

/// Convexity-certified constraint body, always read as `expr(x) >= 0`.
#[derive(Clone, Debug)]
pub enum ConstraintExpr<T> {
    /// `aff(x) - sum_k weight_k * form_k(x)^2`.
    QuadraticSlack {
        aff: LinearForm<T>,
        squares: Vec<SquareTerm<T>>,
    },
    /// `scale * log2(arg(x)) - aff(x)` with `arg(x) > 0` as its domain;
    /// `scale` must be positive.
    LogAffine {
        scale: T,
        arg: LinearForm<T>,
        aff: LinearForm<T>,
    },
}

/// Catalog tag naming what the constraint encodes. The solver treats all
/// tags alike except `Box`, which the first-order solver handles by
/// projection instead of penalties.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    Affine,
    LogRate,
    QuadUpper,
    Surrogate,
    NormBall,
    Box,
}

#[derive(Clone, Debug)]
pub struct Constraint<T> {
    pub kind: ConstraintKind,
    pub expr: ConstraintExpr<T>,
    pub label: String,
}

impl<T: Scalar> Constraint<T> {
    /// Constraint value in its native (barrier) reading; `None` when `x`
    /// is outside a log constraint's domain.
    pub fn value(&self, x: &[T]) -> Option<T> {
        match &self.expr {
            ConstraintExpr::QuadraticSlack { aff, squares } => {
                let mut v = aff.eval(x);
                for sq in squares {
                    let s = sq.form.eval(x);
                    v -= sq.weight * s * s;
                }
                Some(v)
            }
            ConstraintExpr::LogAffine { scale, arg, aff } => {
                let a = arg.eval(x);
                if a <= T::zero() {
                    None
                } else {
                    Some(*scale * a.log2() - aff.eval(x))
                }
            }
        }
    }

    /// Globally defined equivalent reading: log constraints become
    /// `arg - 2^(aff/scale) >= 0`, which has the same zero-sublevel set
    /// but no domain restriction. Used by phase-I and the first-order
    /// solver.
    pub fn exp_value(&self, x: &[T]) -> T {
        match &self.expr {
            ConstraintExpr::QuadraticSlack { .. } => self.value(x).unwrap(),
            ConstraintExpr::LogAffine { scale, arg, aff } => {
                arg.eval(x) - (aff.eval(x) / *scale).exp2()
            }
        }
    }

    /// Adds `s * grad c(x)` (native reading) into `g`. Requires `x` in
    /// the domain.
    pub fn add_grad(&self, x: &[T], s: T, g: &mut [T]) {
        match &self.expr {
            ConstraintExpr::QuadraticSlack { aff, squares } => {
                aff.add_scaled(s, g);
                for sq in squares {
                    let v = sq.form.eval(x);
                    sq.form.add_scaled(-fl::<T>(2.0) * s * sq.weight * v, g);
                }
            }
            ConstraintExpr::LogAffine { scale, arg, aff } => {
                let a = arg.eval(x);
                arg.add_scaled(s * *scale / (T::LN_2() * a), g);
                aff.add_scaled(-s, g);
            }
        }
    }

    /// Adds `s * grad` of the exp-form reading into `g`.
    pub fn add_exp_grad(&self, x: &[T], s: T, g: &mut [T]) {
        match &self.expr {
            ConstraintExpr::QuadraticSlack { .. } => self.add_grad(x, s, g),
            ConstraintExpr::LogAffine { scale, arg, aff } => {
                arg.add_scaled(s, g);
                let e = (aff.eval(x) / *scale).exp2();
                aff.add_scaled(-s * e * T::LN_2() / *scale, g);
            }
        }
    }
}

/// Maximize `x[objective]` over the intersection of the constraints.
#[derive(Clone, Debug)]
pub struct ConvexSubproblem<T> {
    pub n_vars: usize,
    /// Index of the coordinate being maximized.
    pub objective: usize,
    pub constraints: Vec<Constraint<T>>,
    pub var_names: Vec<String>,
    /// Suggested starting point, strictly feasible whenever the builder
    /// can arrange it; the solvers fall back to phase-I otherwise.
    pub start: Vec<T>,
}

impl<T: Scalar> ConvexSubproblem<T> {
    /// Smallest native constraint value at `x`; `None` when `x` leaves a
    /// log domain.
    pub fn min_slack(&self, x: &[T]) -> Option<T> {
        let mut worst = T::infinity();
        for c in &self.constraints {
            worst = worst.min(c.value(x)?);
        }
        Some(worst)
    }

    /// Smallest exp-form constraint value at `x` (always defined).
    pub fn min_exp_slack(&self, x: &[T]) -> T {
        self.constraints
            .iter()
            .map(|c| c.exp_value(x))
            .fold(T::infinity(), T::min)
    }
}

/// Termination condition of a solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    /// Duality-gap certificate below tolerance.
    Optimal,
    /// Phase-I certified there is no strictly feasible point.
    Infeasible,
    /// Iteration cap hit; best iterate returned.
    MaxIter,
    /// Objective unbounded above (cannot occur for the built problems,
    /// which box or ball every variable reachable from the objective).
    Unbounded,
}

/// Solver output: the final iterate, its objective value, and the
/// certificate data.
#[derive(Clone, Debug)]
pub struct Solved<T> {
    pub x: Vec<T>,
    pub objective: T,
    pub status: SolveStatus,
    /// Duality gap (barrier) or final constraint violation (first-order).
    pub gap: T,
    /// Newton steps (barrier) or gradient iterations (first-order).
    pub steps: usize,
}

/// Writes a human-readable dump of a subproblem (variables, constraint
/// catalog entries, starting point) for offline inspection.
pub fn dump_subproblem<T: Scalar, W: Write>(
    p: &ConvexSubproblem<T>,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "subproblem: {} vars, maximize {}", p.n_vars, p.var_names[p.objective])?;
    writeln!(out, "[variables]")?;
    for (i, name) in p.var_names.iter().enumerate() {
        writeln!(out, "  x[{i}] = {name} start={:.6e}", p.start[i])?;
    }
    writeln!(out, "[constraints]")?;
    for c in &p.constraints {
        let kind = match c.kind {
            ConstraintKind::Affine => "affine",
            ConstraintKind::LogRate => "log-rate",
            ConstraintKind::QuadUpper => "quad-upper",
            ConstraintKind::Surrogate => "surrogate",
            ConstraintKind::NormBall => "norm-ball",
            ConstraintKind::Box => "box",
        };
        let slack = c
            .value(&p.start)
            .map(|v| format!("{v:.6e}"))
            .unwrap_or_else(|| "out-of-domain".into());
        writeln!(out, "  {kind:<10} {} slack_at_start={slack}", c.label)?;
    }
    Ok(())
}
