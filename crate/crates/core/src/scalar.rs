//! Scalar abstraction for probabilities, series and polynomial values.
//!
//! Everything that computes a number (partial sums, avoidance products,
//! polynomial evaluation) is written against [`Scalar`], so the same code
//! runs in exact rational arithmetic (the default, see [`crate::Rational`])
//! or in `f64`/`f32` for quick approximate sweeps.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, ToPrimitive};

pub trait Scalar: Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive {
    /// True when arithmetic is exact (no rounding).
    const EXACT: bool;

    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar")
    }

    fn from_i64_exact(n: i64) -> Self {
        Self::from_i64(n).expect("i64 representable in scalar")
    }

    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
}

impl Scalar for f32 {
    const EXACT: bool = false;
}

impl Scalar for BigRational {
    const EXACT: bool = true;
}

/// `2^{-e}`.
pub fn inverse_power_of_two<S: Scalar>(e: u32) -> S {
    let two = S::one() + S::one();
    S::one() / num_traits::pow(two, e as usize)
}

/// `1 - 2^{-e}`: probability that a uniform real misses a fixed pattern on `e` bits.
pub fn miss_probability<S: Scalar>(e: u32) -> S {
    S::one() - inverse_power_of_two::<S>(e)
}

pub fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Renders `n/d`, or `n` for integers.
pub fn rational_string(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn ser_rational<S: serde::Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&rational_string(q))
}
