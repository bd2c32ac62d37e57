//! Scalar arithmetic underlying every trace computation.
//!
//! The same machinery runs either in exact rational arithmetic or in
//! floating point; the scalar type decides which. Exact scalars carry no
//! tolerance at all, floating-point scalars compare against zero with a
//! configurable slack.

use std::fmt;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{NumRef, Signed, ToPrimitive};

/// Arbitrary-precision rational, the default exact scalar.
pub type Rational = num_rational::BigRational;

/// Machine-word rational for small exact problems. Fast, but it can
/// overflow on adversarial inputs; `Rational` is the safe default.
pub type Rational64 = Ratio<i64>;

/// Numbers the heaviness machinery can compute with.
pub trait Scalar:
    NumRef + Signed + PartialOrd + Clone + Send + Sync + fmt::Debug + fmt::Display + 'static
{
    /// True when arithmetic in this type is exact.
    const EXACT: bool;

    fn from_int(v: i64) -> Self;

    /// The value `numer/denom`. Panics on a zero denominator.
    fn from_fraction(numer: i64, denom: i64) -> Self;

    /// Convert from an arbitrary-precision rational; `None` when the
    /// value does not fit this type.
    fn from_rational(value: &Rational) -> Option<Self>;

    /// Reduce into the half-open unit interval `[0, 1)`.
    fn mod1(&self) -> Self;

    /// Slack used when deficits are compared against zero; zero for
    /// exact scalars.
    fn default_tolerance() -> Self;

    fn to_f64_lossy(&self) -> f64;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn from_fraction(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        numer as f64 / denom as f64
    }

    fn from_rational(value: &Rational) -> Option<Self> {
        value.to_f64()
    }

    fn mod1(&self) -> Self {
        // rem_euclid can round up to the modulus for tiny negatives.
        let r = self.rem_euclid(1.0);
        if r >= 1.0 {
            0.0
        } else {
            r
        }
    }

    fn default_tolerance() -> Self {
        1e-9
    }

    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_int(v: i64) -> Self {
        v as f32
    }

    fn from_fraction(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        numer as f32 / denom as f32
    }

    fn from_rational(value: &Rational) -> Option<Self> {
        value.to_f64().map(|v| v as f32)
    }

    fn mod1(&self) -> Self {
        let r = self.rem_euclid(1.0);
        if r >= 1.0 {
            0.0
        } else {
            r
        }
    }

    fn default_tolerance() -> Self {
        1e-4
    }

    fn to_f64_lossy(&self) -> f64 {
        f64::from(*self)
    }
}

impl Scalar for Rational64 {
    const EXACT: bool = true;

    fn from_int(v: i64) -> Self {
        Ratio::from_integer(v)
    }

    fn from_fraction(numer: i64, denom: i64) -> Self {
        Ratio::new(numer, denom)
    }

    fn from_rational(value: &Rational) -> Option<Self> {
        Some(Ratio::new(value.numer().to_i64()?, value.denom().to_i64()?))
    }

    fn mod1(&self) -> Self {
        self.clone() - self.floor()
    }

    fn default_tolerance() -> Self {
        num_traits::Zero::zero()
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_int(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_fraction(numer: i64, denom: i64) -> Self {
        Rational::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn from_rational(value: &Rational) -> Option<Self> {
        Some(value.clone())
    }

    fn mod1(&self) -> Self {
        self.clone() - self.floor()
    }

    fn default_tolerance() -> Self {
        num_traits::Zero::zero()
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Whether a computation is exact or carries a zero-comparison slack.
#[derive(Clone, Debug, PartialEq)]
pub enum NumericMode<S> {
    Exact,
    Approximate { tolerance: S },
}

impl<S: Scalar> NumericMode<S> {
    /// The natural mode for the scalar type.
    pub fn for_scalar() -> Self {
        if S::EXACT {
            NumericMode::Exact
        } else {
            NumericMode::Approximate {
                tolerance: S::default_tolerance(),
            }
        }
    }

    /// Does `d` count as nonnegative under this mode?
    pub fn nonnegative(&self, d: &S) -> bool {
        match self {
            NumericMode::Exact => !d.is_negative(),
            NumericMode::Approximate { tolerance } => *d >= -tolerance.clone(),
        }
    }

    /// Does `d` count as zero under this mode?
    pub fn counts_as_zero(&self, d: &S) -> bool {
        match self {
            NumericMode::Exact => d.is_zero(),
            NumericMode::Approximate { tolerance } => d.abs() <= *tolerance,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, NumericMode::Exact)
    }

    /// Verdict label used in reports: approximate verdicts are flagged
    /// as numerical.
    pub fn label(&self) -> &'static str {
        match self {
            NumericMode::Exact => "exact",
            NumericMode::Approximate { .. } => "numerical",
        }
    }
}
