//! Tangent surrogates for the three nonconvex pieces that the iterative
//! loops replace: the own-signal quadratic (minorized by its tangent
//! plane), the bilinear product `t*q` (majorized by a weighted square
//! sum), and the subtracted interference log term (majorized by its
//! first-order expansion).

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{fl, Scalar};

/// Affine functional of one complex row in real-split coordinates:
/// `constant + sum_c re_coeffs[c]*Re(v_c) + im_coeffs[c]*Im(v_c)`.
#[derive(Clone, Debug)]
pub struct RowAffine<T> {
    pub constant: T,
    pub re_coeffs: Vec<T>,
    pub im_coeffs: Vec<T>,
}

impl<T: Scalar> RowAffine<T> {
    pub fn eval(&self, v: &[Complex<T>]) -> T {
        let mut acc = self.constant;
        for (c, x) in v.iter().enumerate() {
            acc += self.re_coeffs[c] * x.re + self.im_coeffs[c] * x.im;
        }
        acc
    }
}

/// Own-signal received power `u(v) = |v . h|^2 p`.
pub fn received_power<T: Scalar>(v: &[Complex<T>], h: &[Complex<T>], p: T) -> T {
    crate::noma::row_dot(v, h).norm_sqr() * p
}

/// Tangent-plane minorant of [`received_power`] at `v_hat`:
/// `u_hat(v) = u(v_hat) + 2 Re{ w (v - v_hat)^H }` with `w = (v_hat . h) h^H p`.
/// Affine in the real-split coordinates of `v`, touches `u` at `v_hat`,
/// and lies below it everywhere (`u` is convex).
pub fn linearize_u<T: Scalar>(
    v_hat: &[Complex<T>],
    h: &[Complex<T>],
    p: T,
) -> RowAffine<T> {
    let proj = crate::noma::row_dot(v_hat, h);
    let u_hat = proj.norm_sqr() * p;
    let two = fl::<T>(2.0);
    let mut re_coeffs = Vec::with_capacity(v_hat.len());
    let mut im_coeffs = Vec::with_capacity(v_hat.len());
    for hc in h {
        let w = proj * hc.conj() * p;
        re_coeffs.push(two * w.re);
        im_coeffs.push(two * w.im);
    }
    // 2 Re{ w v_hat^H } = 2 u(v_hat), so the constant term is -u(v_hat).
    RowAffine {
        constant: -u_hat,
        re_coeffs,
        im_coeffs,
    }
}

/// Convex majorant of the bilinear product `t*q` expanded at a positive
/// point: `f_hat = (t_hat/2q_hat) q^2 + (q_hat/2t_hat) t^2`. Exact at the
/// expansion point; errors when the expansion point is not positive.
pub fn f_hat<T: Scalar>(t: T, q: T, t_hat: T, q_hat: T) -> Result<T> {
    if t_hat <= T::zero() || q_hat <= T::zero() {
        return Err(Error::NonPositiveExpansion {
            t: t_hat.to_f64().unwrap_or(f64::NAN),
            q: q_hat.to_f64().unwrap_or(f64::NAN),
        });
    }
    let half = fl::<T>(0.5);
    Ok(half * t_hat / q_hat * q * q + half * q_hat / t_hat * t * t)
}

/// First-order expansion of the interference log term
/// `r2(p) = scale * log2(sum_j g_j p_j + noise)` at `p_hat`: returns the
/// value at `p_hat` and the gradient `scale * g_j / (den * ln 2)`. Since
/// `r2` is concave, the expansion majorizes it everywhere.
pub fn linearize_r2<T: Scalar>(g: &[T], p_hat: &[T], noise: T, scale: T) -> (T, Vec<T>) {
    debug_assert_eq!(g.len(), p_hat.len());
    let mut den = noise;
    for (gj, pj) in g.iter().zip(p_hat) {
        den += *gj * *pj;
    }
    let value = scale * den.log2();
    let grad = g.iter().map(|gj| scale * *gj / (den * T::LN_2())).collect();
    (value, grad)
}

/// Direct evaluation of the interference log term, for checking the
/// expansion.
pub fn r2_value<T: Scalar>(g: &[T], p: &[T], noise: T, scale: T) -> T {
    let mut den = noise;
    for (gj, pj) in g.iter().zip(p) {
        den += *gj * *pj;
    }
    scale * den.log2()
}
