//! Numeric ground types shared by the probability and polytope layers.
//!
//! All canonical computation runs on arbitrary-precision rationals so that
//! equality tests, conditional-independence checks, and polytope membership
//! are exact decisions rather than threshold judgements. A float
//! implementation exists solely for externally supplied approximate data
//! (e.g. quantum-valued correlation tables); it reuses the same code paths
//! with an absolute comparison slack.

use num_rational::BigRational;
use num_traits::{Num, Signed};
use std::fmt::{Debug, Display};

/// Arbitrary-precision rational, the canonical scalar.
pub type Rat = BigRational;

/// Field-like scalar every probabilistic structure is generic over.
///
/// `Num` supplies ring/field arithmetic plus zero/one; `Signed` supplies
/// `abs`. The two provided associated functions fix how comparisons behave:
/// exact types compare with zero slack, floats with a small absolute one.
pub trait Scalar:
    Clone + Debug + Display + PartialEq + PartialOrd + Num + Signed + Send + Sync + 'static
{
    /// Construct the scalar `num / den`. Panics if `den == 0`.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Default comparison slack: zero for exact types, `1e-9` for floats.
    fn default_eps() -> Self;

    /// Whether arithmetic on this type is exact.
    fn is_exact() -> bool;
}

impl Scalar for Rat {
    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        BigRational::new(num.into(), den.into())
    }

    fn default_eps() -> Self {
        BigRational::from_integer(0.into())
    }

    fn is_exact() -> bool {
        true
    }
}

impl Scalar for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        num as f64 / den as f64
    }

    fn default_eps() -> Self {
        1e-9
    }

    fn is_exact() -> bool {
        false
    }
}

/// `|a - b| <= eps`; with `eps == 0` this is exact equality.
pub fn eq_within<T: Scalar>(a: &T, b: &T, eps: &T) -> bool {
    (a.clone() - b.clone()).abs() <= *eps
}

/// `|a| <= eps`.
pub fn is_zero_within<T: Scalar>(a: &T, eps: &T) -> bool {
    a.abs() <= *eps
}

/// Trichotomy against zero with slack: negative / zero / positive.
pub fn sign_within<T: Scalar>(a: &T, eps: &T) -> std::cmp::Ordering {
    if a.abs() <= *eps {
        std::cmp::Ordering::Equal
    } else if a.is_positive() {
        std::cmp::Ordering::Greater
    } else {
        std::cmp::Ordering::Less
    }
}

/// Convenience constructor for rational literals in tests and builders.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::from_ratio(num, den)
}

/// Lossy conversion for handing exact values to float-mode consumers.
pub fn rat_to_f64(r: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().expect("rational fits in f64 range")
}
