//! Floating-point scalar abstraction used by every numeric module.
//!
//! All core math is generic over [`Scalar`] so the same code runs in `f32`
//! or `f64`. The trait folds in the numeric bounds the solvers rely on plus
//! two sampling hooks, which keeps random generation free of distribution
//! trait bounds at call sites.

use std::fmt;
use std::iter::{Product, Sum};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;

pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum<Self>
    + Product<Self>
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Draws from the standard normal distribution N(0, 1).
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draws uniformly from the half-open interval `[lo, hi)`.
    fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self;
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.sample(rand_distr::StandardNormal)
            }

            fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self {
                rng.random_range(lo..hi)
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);

/// Converts an `f64` literal into `T`. Panics only if `T` cannot represent
/// any finite approximation of the value, which cannot happen for the
/// built-in float types.
#[inline]
pub fn fl<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("f64 literal must convert to the scalar type")
}
