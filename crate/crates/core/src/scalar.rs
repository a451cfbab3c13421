//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;

/// Floating point type the samplers are generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + FromStr
    + Default
    + Sum
    + Send
    + Sync
    + serde::Serialize
    + 'static
{
    /// Draw from the standard normal distribution.
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draw uniformly from `[0, 1)`.
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Converts an `f64` literal. Values outside the range of `Self` saturate.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance for "sums to one" checks: the requested tolerance, widened
    /// to what the type can actually resolve.
    fn normalization_tolerance(requested: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(4096.0);
        Self::lit(requested).max(floor)
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.sample::<$t, _>(StandardNormal)
            }

            #[inline]
            fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random::<$t>()
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Numerically stable `ln Σ exp(x_i)`. Returns `-inf` for an empty input or
/// when every term is `-inf`.
pub fn log_sum_exp<S: Real>(xs: impl IntoIterator<Item = S> + Clone) -> S {
    let max = xs
        .clone()
        .into_iter()
        .fold(S::neg_infinity(), |m, x| m.max(x));
    if max == S::neg_infinity() {
        return max;
    }
    if max == S::infinity() {
        return max;
    }
    let sum: S = xs.into_iter().map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Turns log-weights into probabilities that sum to one.
pub(crate) fn normalize_log_weights<S: Real>(log_w: &[S]) -> Option<Vec<S>> {
    let total = log_sum_exp(log_w.iter().copied());
    if !total.is_finite() {
        return None;
    }
    Some(log_w.iter().map(|&lw| (lw - total).exp()).collect())
}
