//! Coefficient fields.
//!
//! Everything in this crate is generic over an exact field `S: Scalar`.
//! The canonical choice is [`Rational`](crate::Rational) (arbitrary
//! precision); `Ratio<i64>` also satisfies the bound and is handy for quick
//! experiments, at the cost of panicking on overflow.

use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::ops::Neg;

use num_traits::{FromPrimitive, Num};

/// An exact field of characteristic zero.
pub trait Scalar:
    Clone + Debug + Display + Eq + Hash + Num + Neg<Output = Self> + FromPrimitive + Send + Sync + 'static
{
    fn from_int(n: i128) -> Self {
        Self::from_i128(n).expect("integer does not fit in the scalar type")
    }

    fn is_negative_one(&self) -> bool {
        *self == -Self::one()
    }
}

impl<T> Scalar for T where
    T: Clone + Debug + Display + Eq + Hash + Num + Neg<Output = T> + FromPrimitive + Send + Sync + 'static
{
}

/// Generalized binomial coefficient `top choose k` for any integer `top`.
///
/// For negative `top` this is `top (top-1) ... (top-k+1) / k!`, which is what
/// the coefficient relation `(D^(k) a)(n) = (-1)^k binom(n, k) a(n-k)` needs at
/// negative indices.
pub fn binomial(top: i64, k: u32) -> i128 {
    let mut acc: i128 = 1;
    let top = top as i128;
    for i in 0..k as i128 {
        acc = acc * (top - i) / (i + 1);
    }
    acc
}

pub fn binomial_s<S: Scalar>(top: i64, k: u32) -> S {
    S::from_int(binomial(top, k))
}

pub fn sign<S: Scalar>(exponent: i64) -> S {
    if exponent.rem_euclid(2) == 0 {
        S::one()
    } else {
        -S::one()
    }
}
