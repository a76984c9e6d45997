//! Assembles the two inner subproblems in catalog form.
//!
//! Detection step: variables are the real-split detection rows `v_m`, the
//! SINR proxies `t_mi`, the denominator proxies `q_mi`, and the shared
//! floor `z`; own-signal power is minorized by its tangent plane and the
//! product `t*q` majorized by the weighted-square surrogate, so every
//! constraint lands in the convex catalog. Power step: variables are the
//! per-user powers and `z`, with the subtracted interference log term
//! replaced by its first-order expansion at the previous iterate.
//!
//! Builders also produce a strictly interior starting point by nudging
//! the expansion point inward; if a corner case defeats the nudges the
//! solver's phase-I recovers feasibility on its own.

use num_complex::Complex;

use crate::clustering::BeamPlan;
use crate::config::SystemConfig;
use crate::cvx::surrogate::{linearize_r2, linearize_u};
use crate::cvx::{
    Constraint, ConstraintExpr, ConstraintKind, ConvexSubproblem, LinearForm, SquareTerm,
};
use crate::error::{Error, Result};
use crate::noma::{DetectionMatrix, GainTable, InterferenceMap, PowerAllocation};
use crate::scalar::{fl, Scalar};

/// Index map for the detection-step variables:
/// `[v rows real-split | t | q | z]`.
#[derive(Clone, Copy, Debug)]
pub struct DetectionLayout {
    pub m_beams: usize,
}

impl DetectionLayout {
    pub fn new(m_beams: usize) -> Self {
        Self { m_beams }
    }

    pub fn n_vars(&self) -> usize {
        2 * self.m_beams * self.m_beams + 4 * self.m_beams + 1
    }

    pub fn re(&self, beam: usize, col: usize) -> usize {
        2 * (beam * self.m_beams + col)
    }

    pub fn im(&self, beam: usize, col: usize) -> usize {
        self.re(beam, col) + 1
    }

    pub fn t(&self, beam: usize, slot: usize) -> usize {
        2 * self.m_beams * self.m_beams + 2 * beam + slot
    }

    pub fn q(&self, beam: usize, slot: usize) -> usize {
        2 * self.m_beams * self.m_beams + 2 * self.m_beams + 2 * beam + slot
    }

    pub fn z(&self) -> usize {
        self.n_vars() - 1
    }

    pub fn names(&self) -> Vec<String> {
        let mut names = vec![String::new(); self.n_vars()];
        for m in 0..self.m_beams {
            for c in 0..self.m_beams {
                names[self.re(m, c)] = format!("v[{m}][{c}].re");
                names[self.im(m, c)] = format!("v[{m}][{c}].im");
            }
            for i in 0..2 {
                names[self.t(m, i)] = format!("t[{m}][{i}]");
                names[self.q(m, i)] = format!("q[{m}][{i}]");
            }
        }
        names[self.z()] = "z".into();
        names
    }

    /// Reads the detection rows out of a solution vector.
    pub fn unpack_rows<T: Scalar>(&self, x: &[T]) -> DetectionMatrix<T> {
        let rows = (0..self.m_beams)
            .map(|m| {
                (0..self.m_beams)
                    .map(|c| Complex::new(x[self.re(m, c)], x[self.im(m, c)]))
                    .collect()
            })
            .collect();
        DetectionMatrix { rows }
    }

    /// Re/Im affine forms of `v_m . a` for a fixed coefficient vector.
    fn dot_forms<T: Scalar>(&self, beam: usize, a: &[Complex<T>]) -> (LinearForm<T>, LinearForm<T>) {
        let mut re = LinearForm::constant(T::zero());
        let mut im = LinearForm::constant(T::zero());
        for (c, ac) in a.iter().enumerate() {
            re.push(self.re(beam, c), ac.re);
            re.push(self.im(beam, c), -ac.im);
            im.push(self.re(beam, c), ac.im);
            im.push(self.im(beam, c), ac.re);
        }
        (re, im)
    }
}

/// Index map for the power-step variables: `[P | z]`.
#[derive(Clone, Copy, Debug)]
pub struct PowerLayout {
    pub m_beams: usize,
}

impl PowerLayout {
    pub fn new(m_beams: usize) -> Self {
        Self { m_beams }
    }

    pub fn n_vars(&self) -> usize {
        2 * self.m_beams + 1
    }

    pub fn p(&self, beam: usize, slot: usize) -> usize {
        2 * beam + slot
    }

    pub fn z(&self) -> usize {
        2 * self.m_beams
    }

    pub fn names(&self) -> Vec<String> {
        let mut names = vec![String::new(); self.n_vars()];
        for m in 0..self.m_beams {
            for i in 0..2 {
                names[self.p(m, i)] = format!("p[{m}][{i}]");
            }
        }
        names[self.z()] = "z".into();
        names
    }

    pub fn unpack_powers<T: Scalar>(&self, x: &[T]) -> PowerAllocation<T> {
        PowerAllocation {
            p: (0..self.m_beams)
                .map(|m| [x[self.p(m, 0)], x[self.p(m, 1)]])
                .collect(),
        }
    }
}

/// Expansion point of the detection step. Tangency demands `t_hat` be the
/// exact SINR and `q_hat` the exact denominator at `v_hat` under the
/// current powers; [`DetectionExpansion::tangent`] computes them that way.
#[derive(Clone, Debug)]
pub struct DetectionExpansion<T> {
    pub v_hat: Vec<Vec<Complex<T>>>,
    pub t_hat: Vec<[T; 2]>,
    pub q_hat: Vec<[T; 2]>,
}

impl<T: Scalar> DetectionExpansion<T> {
    pub fn tangent(
        det: &DetectionMatrix<T>,
        plan: &BeamPlan<T>,
        map: &InterferenceMap<T>,
        cfg: &SystemConfig<T>,
        power: &PowerAllocation<T>,
    ) -> Self {
        let gains = GainTable::build(det, plan, cfg);
        let m_beams = plan.n_beams();
        let mut t_hat = vec![[T::zero(); 2]; m_beams];
        let mut q_hat = vec![[T::zero(); 2]; m_beams];
        for m in 0..m_beams {
            for i in 0..2 {
                let mut den = gains.noise[m];
                for &(j, l) in map.set(m, i) {
                    den += gains.g[m][j][l] * power.get(j, l);
                }
                q_hat[m][i] = den;
                t_hat[m][i] = gains.own(m, i) * power.get(m, i) / den;
            }
        }
        Self {
            v_hat: det.rows.clone(),
            t_hat,
            q_hat,
        }
    }
}

/// Builds the detection-step subproblem around `exp`. Errors with
/// [`Error::NonPositiveExpansion`] when a product surrogate cannot be
/// expanded (zero SINR or denominator at the expansion point).
pub fn build_detection_subproblem<T: Scalar>(
    cfg: &SystemConfig<T>,
    plan: &BeamPlan<T>,
    map: &InterferenceMap<T>,
    eta_prime: T,
    p_tilde: &PowerAllocation<T>,
    exp: &DetectionExpansion<T>,
) -> Result<ConvexSubproblem<T>> {
    let m_beams = plan.n_beams();
    let layout = DetectionLayout::new(m_beams);
    let rho = map.slot_fraction;
    let tau = cfg.sinr_floor(rho);
    let mut constraints = Vec::with_capacity(9 * m_beams);
    for m in 0..m_beams {
        for i in 0..2 {
            let (t_hat, q_hat) = (exp.t_hat[m][i], exp.q_hat[m][i]);
            if t_hat <= T::zero() || q_hat <= T::zero() {
                return Err(Error::NonPositiveExpansion {
                    t: t_hat.to_f64().unwrap_or(f64::NAN),
                    q: q_hat.to_f64().unwrap_or(f64::NAN),
                });
            }
            let power_cost = eta_prime * (cfg.circuit_power + cfg.amp_inefficiency * p_tilde.get(m, i));
            constraints.push(Constraint {
                kind: ConstraintKind::LogRate,
                expr: ConstraintExpr::LogAffine {
                    scale: rho,
                    arg: LinearForm::single(layout.t(m, i), T::one(), T::one()),
                    aff: LinearForm::single(layout.z(), T::one(), power_cost),
                },
                label: format!("rate({m},{i})"),
            });
            constraints.push(Constraint {
                kind: ConstraintKind::Affine,
                expr: ConstraintExpr::QuadraticSlack {
                    aff: LinearForm::single(layout.t(m, i), T::one(), -tau),
                    squares: vec![],
                },
                label: format!("floor({m},{i})"),
            });
            // Denominator proxy: q >= interference(v) + noise.
            let mut squares = Vec::new();
            for &(j, l) in map.set(m, i) {
                let p = p_tilde.get(j, l);
                if p > T::zero() {
                    let (re, im) = layout.dot_forms(m, plan.effective(j, l));
                    squares.push(SquareTerm { weight: p, form: re });
                    squares.push(SquareTerm { weight: p, form: im });
                }
            }
            let noise_const = if cfg.exact_noise {
                for n in 0..plan.combiner.ncols() {
                    let col: Vec<Complex<T>> =
                        (0..m_beams).map(|c| plan.combiner[(c, n)]).collect();
                    let (re, im) = layout.dot_forms(m, &col);
                    squares.push(SquareTerm {
                        weight: cfg.noise_power,
                        form: re,
                    });
                    squares.push(SquareTerm {
                        weight: cfg.noise_power,
                        form: im,
                    });
                }
                T::zero()
            } else {
                cfg.noise_power
            };
            constraints.push(Constraint {
                kind: ConstraintKind::QuadUpper,
                expr: ConstraintExpr::QuadraticSlack {
                    aff: LinearForm::single(layout.q(m, i), T::one(), -noise_const),
                    squares,
                },
                label: format!("den({m},{i})"),
            });
            // Product surrogate: tangent minorant of the own-signal power
            // dominates the weighted-square majorant of t*q.
            let own = linearize_u(&exp.v_hat[m], plan.effective(m, i), p_tilde.get(m, i));
            let mut aff = LinearForm::constant(own.constant);
            for (c, (rc, ic)) in own.re_coeffs.iter().zip(&own.im_coeffs).enumerate() {
                aff.push(layout.re(m, c), *rc);
                aff.push(layout.im(m, c), *ic);
            }
            let half = fl::<T>(0.5);
            constraints.push(Constraint {
                kind: ConstraintKind::Surrogate,
                expr: ConstraintExpr::QuadraticSlack {
                    aff,
                    squares: vec![
                        SquareTerm {
                            weight: half * t_hat / q_hat,
                            form: LinearForm::single(layout.q(m, i), T::one(), T::zero()),
                        },
                        SquareTerm {
                            weight: half * q_hat / t_hat,
                            form: LinearForm::single(layout.t(m, i), T::one(), T::zero()),
                        },
                    ],
                },
                label: format!("surr({m},{i})"),
            });
        }
    }
    for m in 0..m_beams {
        let mut squares = Vec::new();
        for n in 0..plan.combiner.ncols() {
            let col: Vec<Complex<T>> = (0..m_beams).map(|c| plan.combiner[(c, n)]).collect();
            let (re, im) = layout.dot_forms(m, &col);
            squares.push(SquareTerm {
                weight: T::one(),
                form: re,
            });
            squares.push(SquareTerm {
                weight: T::one(),
                form: im,
            });
        }
        constraints.push(Constraint {
            kind: ConstraintKind::NormBall,
            expr: ConstraintExpr::QuadraticSlack {
                aff: LinearForm::constant(T::one()),
                squares,
            },
            label: format!("ball({m})"),
        });
    }

    // Strictly interior start: nudge the expansion point inward and put z
    // one unit below the worst rate slack. The t shrink dominates the other
    // two nudges in the surrogate slack, and its size bounds how small an
    // exact-objective improvement a round can still deliver, so it is kept
    // tiny; when the floor leaves no room for the full shrink the start
    // splits the remaining gap instead.
    let mut start = vec![T::zero(); layout.n_vars()];
    let v_shrink = T::one() - fl::<T>(1e-9);
    let t_shrink = T::one() - fl::<T>(1e-7);
    let q_grow = T::one() + fl::<T>(1e-9);
    let half = fl::<T>(0.5);
    for m in 0..m_beams {
        for c in 0..m_beams {
            start[layout.re(m, c)] = exp.v_hat[m][c].re * v_shrink;
            start[layout.im(m, c)] = exp.v_hat[m][c].im * v_shrink;
        }
        for i in 0..2 {
            let t_hat = exp.t_hat[m][i];
            let mut t0 = t_hat * t_shrink;
            if t0 <= tau && t_hat > tau {
                t0 = tau + (t_hat - tau) * half;
            }
            start[layout.t(m, i)] = t0;
            start[layout.q(m, i)] = exp.q_hat[m][i] * q_grow;
        }
    }
    let mut z0 = T::infinity();
    for c in constraints.iter().filter(|c| c.kind == ConstraintKind::LogRate) {
        if let Some(v) = c.value(&start) {
            z0 = z0.min(v);
        }
    }
    start[layout.z()] = if z0.is_finite() { z0 - T::one() } else { T::zero() };

    Ok(ConvexSubproblem {
        n_vars: layout.n_vars(),
        objective: layout.z(),
        constraints,
        var_names: layout.names(),
        start,
    })
}

/// Builds the power-step subproblem at the expansion point `p_hat` with
/// the detection gains fixed.
pub fn build_power_subproblem<T: Scalar>(
    cfg: &SystemConfig<T>,
    gains: &GainTable<T>,
    map: &InterferenceMap<T>,
    eta_prime: T,
    p_hat: &PowerAllocation<T>,
) -> ConvexSubproblem<T> {
    let m_beams = map.n_beams();
    let layout = PowerLayout::new(m_beams);
    let rho = map.slot_fraction;
    let floor_factor = cfg.min_rate_factor(rho);
    let mut constraints = Vec::with_capacity(8 * m_beams);
    for m in 0..m_beams {
        for i in 0..2 {
            let set = map.set(m, i);
            let g_list: Vec<T> = set.iter().map(|&(j, l)| gains.g[m][j][l]).collect();
            let p_list: Vec<T> = set.iter().map(|&(j, l)| p_hat.get(j, l)).collect();
            let (r2_at, r2_grad) = linearize_r2(&g_list, &p_list, gains.noise[m], rho);

            // arg = own + interference + noise; aff = z + eta'(Pc + xi P)
            // + first-order expansion of the subtracted log term.
            let mut arg = LinearForm::constant(gains.noise[m]);
            arg.push(layout.p(m, i), gains.own(m, i));
            let mut aff_const = eta_prime * cfg.circuit_power + r2_at;
            let mut aff = LinearForm::constant(T::zero());
            aff.push(layout.z(), T::one());
            aff.push(layout.p(m, i), eta_prime * cfg.amp_inefficiency);
            for (k, &(j, l)) in set.iter().enumerate() {
                arg.push(layout.p(j, l), g_list[k]);
                aff.push(layout.p(j, l), r2_grad[k]);
                aff_const -= r2_grad[k] * p_list[k];
            }
            aff.constant = aff_const;
            constraints.push(Constraint {
                kind: ConstraintKind::LogRate,
                expr: ConstraintExpr::LogAffine {
                    scale: rho,
                    arg,
                    aff,
                },
                label: format!("rate({m},{i})"),
            });

            // Min-rate floor in the product form: own-signal power must
            // carry `floor_factor` times interference plus noise.
            let mut floor = LinearForm::constant(-floor_factor * gains.noise[m]);
            floor.push(layout.p(m, i), gains.own(m, i));
            for (k, &(j, l)) in set.iter().enumerate() {
                floor.push(layout.p(j, l), -floor_factor * g_list[k]);
            }
            constraints.push(Constraint {
                kind: ConstraintKind::Affine,
                expr: ConstraintExpr::QuadraticSlack {
                    aff: floor,
                    squares: vec![],
                },
                label: format!("floor({m},{i})"),
            });
        }
    }
    for m in 0..m_beams {
        for i in 0..2 {
            constraints.push(Constraint {
                kind: ConstraintKind::Box,
                expr: ConstraintExpr::QuadraticSlack {
                    aff: LinearForm::single(layout.p(m, i), T::one(), T::zero()),
                    squares: vec![],
                },
                label: format!("lo({m},{i})"),
            });
            constraints.push(Constraint {
                kind: ConstraintKind::Box,
                expr: ConstraintExpr::QuadraticSlack {
                    aff: LinearForm::single(layout.p(m, i), -T::one(), cfg.p_max),
                    squares: vec![],
                },
                label: format!("hi({m},{i})"),
            });
        }
    }

    // Start: blend the clamped expansion point with a strictly feasible
    // floor fill so the min-rate rows hold with margin.
    let strict_fill = crate::noma::min_power_fill(gains, map, cfg, fl(1e-2)).ok();
    let mut start = vec![T::zero(); layout.n_vars()];
    let lo = cfg.p_max * fl::<T>(1e-12);
    let hi = cfg.p_max * (T::one() - fl::<T>(1e-9));
    for m in 0..m_beams {
        for i in 0..2 {
            let clamped = p_hat.get(m, i).max(lo).min(hi);
            let fill = strict_fill
                .as_ref()
                .map(|f| f.get(m, i))
                .unwrap_or(clamped)
                .max(cfg.p_max * fl(1e-9))
                .min(hi);
            start[layout.p(m, i)] = fl::<T>(0.9) * clamped + fl::<T>(0.1) * fill;
        }
    }
    let mut z0 = T::infinity();
    for c in constraints.iter().filter(|c| c.kind == ConstraintKind::LogRate) {
        if let Some(v) = c.value(&start) {
            z0 = z0.min(v);
        }
    }
    start[layout.z()] = if z0.is_finite() { z0 - T::one() } else { T::zero() };

    ConvexSubproblem {
        n_vars: layout.n_vars(),
        objective: layout.z(),
        constraints,
        var_names: layout.names(),
        start,
    }
}
