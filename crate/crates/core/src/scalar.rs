//! Scalar abstraction so the geometry and the engine run on `f32` or `f64`.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};

use num_traits::Float;
use rand::Rng;
use serde::{de::DeserializeOwned, Serialize};

/// Floating-point scalar the whole crate is generic over.
///
/// `EPS_GEO` is the absolute tolerance used by every containment and distance
/// comparison; replayability requires one fixed rule per scalar type.
pub trait Scalar:
    Float
    + Default
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    const EPS_GEO: Self;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    /// Uniform draw from `[0, 1)`.
    fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform draw from the open interval `(0, 1)`; safe as a log argument.
    fn unit_open<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let u = Self::unit(rng);
            if u > Self::zero() {
                return u;
            }
        }
    }

    fn half(self) -> Self {
        self / Self::from_f64(2.0)
    }
}

macro_rules! impl_scalar {
    ($t:ty, $eps:expr) => {
        impl Scalar for $t {
            const EPS_GEO: Self = $eps;

            #[inline]
            fn from_f64(v: f64) -> Self {
                v as $t
            }
            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }
            #[inline]
            fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.gen::<$t>()
            }
        }
    };
}

impl_scalar!(f64, 1e-12);
impl_scalar!(f32, 1e-5);

/// Total order on finite scalars, for priority queues keyed by time.
///
/// Panics on NaN; all times in the engine are validated finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteOrd<S: Scalar>(pub S);

impl<S: Scalar> Eq for FiniteOrd<S> {}

impl<S: Scalar> PartialOrd for FiniteOrd<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> Ord for FiniteOrd<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .partial_cmp(&other.0)
            .expect("NaN is not a valid event time")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_open_never_zero() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let u: f64 = Scalar::unit_open(&mut rng);
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn finite_ord_sorts() {
        let mut v = vec![FiniteOrd(3.0f64), FiniteOrd(1.0), FiniteOrd(2.0)];
        v.sort();
        assert_eq!(v[0].0, 1.0);
        assert_eq!(v[2].0, 3.0);
    }

    use rand::SeedableRng;
}
