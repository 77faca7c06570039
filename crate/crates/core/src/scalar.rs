//! Scalar abstraction shared by every numerical module.

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftNum;

/// Floating point scalar: `f32` or `f64`.
///
/// Everything in the crate is written against this trait. Tolerances quoted in
/// the docs (1e-9 identities and the like) assume `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + Sum
    + Default
    + fmt::Display
    + fmt::Debug
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Lossy for `f32`.
    fn lit(v: f64) -> Self;

    /// Converts an index or count.
    fn from_count(n: usize) -> Self {
        Self::lit(n as f64)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn standard_normal<G: Rng + ?Sized>(rng: &mut G) -> Self;

    /// Uniform draw on `[0, 1)`.
    fn unit<G: Rng + ?Sized>(rng: &mut G) -> Self;
}

impl Real for f64 {
    #[inline]
    fn lit(v: f64) -> Self {
        v
    }

    #[inline]
    fn standard_normal<G: Rng + ?Sized>(rng: &mut G) -> Self {
        StandardNormal.sample(rng)
    }

    #[inline]
    fn unit<G: Rng + ?Sized>(rng: &mut G) -> Self {
        rng.random::<f64>()
    }
}

impl Real for f32 {
    #[inline]
    fn lit(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn standard_normal<G: Rng + ?Sized>(rng: &mut G) -> Self {
        StandardNormal.sample(rng)
    }

    #[inline]
    fn unit<G: Rng + ?Sized>(rng: &mut G) -> Self {
        rng.random::<f32>()
    }
}

#[inline]
pub(crate) fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(R::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub(crate) fn norm_sq<R: Real>(a: &[R]) -> R {
    dot(a, a)
}

/// `ln Σ exp(v)` with max subtraction. Returns `-inf` for an empty slice.
pub fn log_sum_exp<R: Real>(values: &[R]) -> R {
    let max = values.iter().copied().fold(R::neg_infinity(), R::max);
    if !max.is_finite() {
        return max;
    }
    let sum: R = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Turns log-weights into a normalized probability vector.
///
/// Adding the same constant to every entry leaves the result unchanged.
pub fn normalize_log_weights<R: Real>(log_weights: &[R]) -> Vec<R> {
    let lse = log_sum_exp(log_weights);
    log_weights.iter().map(|&v| (v - lse).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn log_sum_exp_survives_huge_offsets() {
        let v = [1000.0_f64, 1000.0];
        assert!((log_sum_exp(&v) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp::<f64>(&[]), f64::NEG_INFINITY);
    }

    proptest! {
        #[test]
        fn normalization_is_shift_invariant(
            w in proptest::collection::vec(-50.0f64..50.0, 1..40),
            shift in -1e3f64..1e3,
        ) {
            let a = normalize_log_weights(&w);
            let shifted: Vec<f64> = w.iter().map(|v| v + shift).collect();
            let b = normalize_log_weights(&shifted);
            let total: f64 = a.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
