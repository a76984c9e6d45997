//! Small dense linear algebra on complex vectors and matrices.
//!
//! Problem sizes here are tiny (matrices up to the RF-chain count, Newton
//! systems below ~100 unknowns), so the routines favour clarity and
//! determinism over blocking or pivot heuristics beyond partial pivoting.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Hermitian inner product `sum_i conj(a_i) * b_i`.
pub fn inner<T: Scalar>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Complex::new(T::zero(), T::zero());
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * *y;
    }
    acc
}

/// Squared Euclidean norm of a complex vector.
pub fn norm2<T: Scalar>(a: &[Complex<T>]) -> T {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn norm<T: Scalar>(a: &[Complex<T>]) -> T {
    norm2(a).sqrt()
}

/// Dense complex matrix in row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat<T> {
    nrows: usize,
    ncols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> CMat<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![Complex::new(T::zero(), T::zero()); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        Self {
            nrows,
            ncols,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, r: usize) -> &[Complex<T>] {
        &self.data[r * self.ncols..(r + 1) * self.ncols]
    }

    /// `self * x` for a column vector `x`.
    pub fn mul_vec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.ncols, "mul_vec dimension");
        (0..self.nrows)
            .map(|r| {
                let mut acc = Complex::new(T::zero(), T::zero());
                for (c, xv) in x.iter().enumerate() {
                    acc += self[(r, c)] * *xv;
                }
                acc
            })
            .collect()
    }

    /// `v * self` for a row vector `v`.
    pub fn row_vec_mul(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(v.len(), self.nrows, "row_vec_mul dimension");
        (0..self.ncols)
            .map(|c| {
                let mut acc = Complex::new(T::zero(), T::zero());
                for (r, vv) in v.iter().enumerate() {
                    acc += *vv * self[(r, c)];
                }
                acc
            })
            .collect()
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> Self {
        let mut out = Self::zeros(self.ncols, self.nrows);
        for r in 0..self.nrows {
            for c in 0..self.ncols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "mul dimension");
        let mut out = Self::zeros(self.nrows, other.ncols);
        for r in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(r, k)];
                for c in 0..other.ncols {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        out
    }

    pub fn frob_norm(&self) -> T {
        self.data
            .iter()
            .map(|x| x.norm_sqr())
            .sum::<T>()
            .sqrt()
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        assert_eq!(self.nrows, self.ncols, "inverse needs a square matrix");
        let n = self.nrows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let mut pivot = col;
            let mut best = a[(col, col)].norm_sqr();
            for r in col + 1..n {
                let mag = a[(r, col)].norm_sqr();
                if mag > best {
                    best = mag;
                    pivot = r;
                }
            }
            if best <= T::zero() {
                return Err(Error::DegenerateChannel { cond: f64::INFINITY });
            }
            if pivot != col {
                for c in 0..n {
                    let tmp = a[(col, c)];
                    a[(col, c)] = a[(pivot, c)];
                    a[(pivot, c)] = tmp;
                    let tmp = inv[(col, c)];
                    inv[(col, c)] = inv[(pivot, c)];
                    inv[(pivot, c)] = tmp;
                }
            }
            let d = a[(col, col)];
            let dinv = Complex::new(T::one(), T::zero()) / d;
            for c in 0..n {
                a[(col, c)] *= dinv;
                inv[(col, c)] *= dinv;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f.norm_sqr() == T::zero() {
                    continue;
                }
                for c in 0..n {
                    let ac = a[(col, c)];
                    let ic = inv[(col, c)];
                    a[(r, c)] -= f * ac;
                    inv[(r, c)] -= f * ic;
                }
            }
        }
        Ok(inv)
    }

    /// Frobenius condition estimate `||A||_F * ||A^-1||_F`; an upper bound
    /// on the spectral condition number up to a factor of the dimension.
    pub fn cond_frob(&self) -> Result<T> {
        let inv = self.inverse()?;
        Ok(self.frob_norm() * inv.frob_norm())
    }
}

impl<T> std::ops::Index<(usize, usize)> for CMat<T> {
    type Output = Complex<T>;
    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[r * self.ncols + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMat<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[r * self.ncols + c]
    }
}

/// Solves `A x = b` for symmetric positive definite `A` (row-major, n x n)
/// by Cholesky factorization. Returns `None` when the factorization hits a
/// nonpositive pivot.
pub fn solve_spd<T: Scalar>(a: &[T], b: &[T], n: usize) -> Option<Vec<T>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    // Lower-triangular factor L with A = L L^T.
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= T::zero() {
                    return None;
                }
                l[i * n + j] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    // Forward substitution L y = b.
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    // Back substitution L^T x = y.
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn inner_product_conjugates_the_left_argument() {
        let a = vec![c(0.0, 1.0), c(2.0, 0.0)];
        let b = vec![c(1.0, 0.0), c(0.0, 1.0)];
        // conj(i)*1 + conj(2)*i = -i + 2i = i
        assert_eq!(inner(&a, &b), c(0.0, 1.0));
    }

    #[test]
    fn inverse_recovers_identity() {
        let m = CMat::from_rows(&[
            vec![c(2.0, 0.0), c(0.0, 1.0)],
            vec![c(0.0, -1.0), c(3.0, 0.0)],
        ]);
        let inv = m.inverse().unwrap();
        let prod = m.mul(&inv);
        for r in 0..2 {
            for c2 in 0..2 {
                let want = if r == c2 { 1.0 } else { 0.0 };
                assert!((prod[(r, c2)].re - want).abs() < 1e-12);
                assert!(prod[(r, c2)].im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn inverse_rejects_singular_matrices() {
        let m = CMat::from_rows(&[
            vec![c(1.0, 0.0), c(2.0, 0.0)],
            vec![c(2.0, 0.0), c(4.0, 0.0)],
        ]);
        assert!(m.inverse().is_err());
    }

    #[test]
    fn spd_solve_matches_hand_solution() {
        // A = [[4,2],[2,3]], b = [2,5] => x = [-0.5, 2]
        let a: Vec<f64> = vec![4.0, 2.0, 2.0, 3.0];
        let b = vec![2.0, 5.0];
        let x = solve_spd(&a, &b, 2).unwrap();
        assert!((x[0] + 0.5).abs() < 1e-12);
        assert!((x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn spd_solve_detects_indefinite_matrices() {
        let a = vec![1.0, 2.0, 2.0, 1.0];
        assert!(solve_spd(&a, &[1.0, 1.0], 2).is_none());
    }

    #[test]
    fn row_vector_products_agree_with_explicit_sums() {
        let m = CMat::from_rows(&[
            vec![c(1.0, 1.0), c(0.0, 2.0), c(3.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, -1.0), c(2.0, 2.0)],
        ]);
        let v = vec![c(1.0, 0.0), c(0.0, 1.0)];
        let out = m.row_vec_mul(&v);
        for col in 0..3 {
            let want = v[0] * m[(0, col)] + v[1] * m[(1, col)];
            assert_eq!(out[col], want);
        }
    }
}
