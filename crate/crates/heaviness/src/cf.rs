//! Continued fractions of rationals in `[0, 1)` under the even-length
//! normalization, and the sweep comparing divisibility of odd-indexed
//! partial quotients against the exact heaviness decision for the
//! target `[0, 1/k)`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::multiples::{heavy_multiples_exact, MultiplesVerdict};
use crate::observable::IntervalUnion;
use crate::scalar::{Rational, Scalar};

/// Partial quotients `a_1..a_m` of a rational in `[0, 1)`; the integer
/// part `a_0` is always zero here. The even-length normal form rewrites
/// a trailing quotient so that `m` is even without changing the value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContinuedFraction {
    quotients: Vec<u64>,
}

impl ContinuedFraction {
    /// Canonical Euclidean expansion; the last quotient is at least 2,
    /// and zero expands to the empty list.
    pub fn expand(x: &Rational) -> Result<Self> {
        if x.is_negative() || *x >= Rational::from_fraction(1, 1) {
            return Err(Error::OutOfRange(format!("x = {x} is outside [0, 1)")));
        }
        let mut a = x.denom().clone();
        let mut b = x.numer().clone();
        let mut quotients = Vec::new();
        while !b.is_zero() {
            let (quot, rem) = a.div_rem(&b);
            let q = quot
                .to_u64()
                .ok_or_else(|| Error::OutOfRange(format!("partial quotient {quot} exceeds u64")))?;
            quotients.push(q);
            a = b;
            b = rem;
        }
        Ok(ContinuedFraction { quotients })
    }

    /// Build from raw quotients. All must be positive, and the value must
    /// stay below one (which only the single quotient `[1]` violates).
    pub fn from_quotients(quotients: Vec<u64>) -> Result<Self> {
        if quotients.iter().any(|&a| a == 0) {
            return Err(Error::OutOfRange("partial quotients must be positive".into()));
        }
        if quotients == [1] {
            return Err(Error::OutOfRange("[0; 1] equals 1, outside [0, 1)".into()));
        }
        Ok(ContinuedFraction { quotients })
    }

    /// Rewrite to an even number of quotients, preserving the value:
    /// a trailing quotient of at least 2 splits as `a -> (a - 1, 1)`,
    /// and a trailing 1 merges backward.
    pub fn normalize(mut self) -> Self {
        if self.quotients.len() % 2 == 1 {
            let last = *self.quotients.last().expect("odd length is nonzero");
            if last >= 2 {
                *self.quotients.last_mut().unwrap() = last - 1;
                self.quotients.push(1);
            } else {
                // A lone [1] is excluded at construction, so there is a
                // previous quotient to merge into.
                self.quotients.pop();
                *self.quotients.last_mut().expect("length at least two") += 1;
            }
        }
        self
    }

    pub fn is_normalized(&self) -> bool {
        self.quotients.len() % 2 == 0
    }

    /// The integer part; zero for every value in `[0, 1)`.
    pub fn integer_part(&self) -> u64 {
        0
    }

    pub fn quotients(&self) -> &[u64] {
        &self.quotients
    }

    pub fn len(&self) -> usize {
        self.quotients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotients.is_empty()
    }

    /// Exact value by back-substitution: fold `v <- 1 / (a + v)` from
    /// the last quotient.
    pub fn value(&self) -> Rational {
        let mut v = Rational::zero();
        for &a in self.quotients.iter().rev() {
            let denom = Rational::from_integer(BigInt::from(a)) + v;
            v = Rational::new(BigInt::from(1), BigInt::from(1)) / denom;
        }
        v
    }
}

/// Euclidean expansion followed by the even-length normalization.
pub fn cf_expand_normalized(x: &Rational) -> Result<ContinuedFraction> {
    Ok(ContinuedFraction::expand(x)?.normalize())
}

/// Does `k` divide every odd-indexed quotient `a_1, a_3, ...` of a
/// normalized expansion? Vacuously true for the empty expansion.
pub fn odd_index_divisible(cf: &ContinuedFraction, k: u64) -> Result<bool> {
    if !cf.is_normalized() {
        return Err(Error::NotNormalized);
    }
    if k == 0 {
        return Err(Error::OutOfRange("divisor must be positive".into()));
    }
    Ok(cf.quotients().iter().step_by(2).all(|a| a % k == 0))
}

/// One reduced fraction of the sweep: both verdicts and their agreement.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub numer: u64,
    pub denom: u64,
    pub heavy: bool,
    pub divisible: bool,
    pub agree: bool,
    pub period_surplus: Rational,
    pub first_failure: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub divisor: u64,
    pub max_denominator: u64,
    pub total: u64,
    pub agreements: u64,
    pub mismatches: Vec<SweepRow>,
}

impl SweepReport {
    pub fn fully_agrees(&self) -> bool {
        self.agreements == self.total
    }
}

/// Every reduced p/q with `1 <= p < q <= max_denominator`, comparing the
/// exact heaviness decision on `[0, 1/divisor)` against divisibility of
/// the odd-indexed quotients.
pub fn characterization_rows(divisor: u64, max_denominator: u64) -> Result<Vec<SweepRow>> {
    if divisor < 2 {
        return Err(Error::OutOfRange("divisor must be at least 2".into()));
    }
    if max_denominator < 2 {
        return Err(Error::OutOfRange("need denominators up to at least 2".into()));
    }
    let target = IntervalUnion::single(
        Rational::zero(),
        Rational::from_fraction(1, divisor as i64),
    )?;
    let per_denominator: Vec<Vec<SweepRow>> = (2..=max_denominator)
        .into_par_iter()
        .map(|q| {
            let mut rows = Vec::new();
            for p in 1..q {
                if p.gcd(&q) != 1 {
                    continue;
                }
                let x = Rational::new(BigInt::from(p), BigInt::from(q));
                let decision = heavy_multiples_exact(&x, &target)?;
                let cf = cf_expand_normalized(&x)?;
                let divisible = odd_index_divisible(&cf, divisor)?;
                let heavy = decision.is_heavy();
                let first_failure = match decision.verdict {
                    MultiplesVerdict::Heavy => None,
                    MultiplesVerdict::NotHeavy { first_failure } => Some(first_failure),
                };
                rows.push(SweepRow {
                    numer: p,
                    denom: q,
                    heavy,
                    divisible,
                    agree: heavy == divisible,
                    period_surplus: decision.period_surplus,
                    first_failure,
                });
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per_denominator.into_iter().flatten().collect())
}

pub fn characterization_sweep(divisor: u64, max_denominator: u64) -> Result<SweepReport> {
    let rows = characterization_rows(divisor, max_denominator)?;
    let total = rows.len() as u64;
    let agreements = rows.iter().filter(|r| r.agree).count() as u64;
    let mismatches = rows.into_iter().filter(|r| !r.agree).collect();
    Ok(SweepReport {
        divisor,
        max_denominator,
        total,
        agreements,
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(n: i64, d: i64) -> Rational {
        Rational::from_fraction(n, d)
    }

    #[test]
    fn canonical_expansions() {
        assert_eq!(ContinuedFraction::expand(&big(0, 1)).unwrap().quotients(), &[] as &[u64]);
        assert_eq!(ContinuedFraction::expand(&big(1, 2)).unwrap().quotients(), &[2]);
        assert_eq!(ContinuedFraction::expand(&big(2, 5)).unwrap().quotients(), &[2, 2]);
        assert_eq!(ContinuedFraction::expand(&big(3, 5)).unwrap().quotients(), &[1, 1, 2]);
        assert!(ContinuedFraction::expand(&big(7, 5)).is_err());
    }

    #[test]
    fn normalization_examples() {
        let half = cf_expand_normalized(&big(1, 2)).unwrap();
        assert_eq!(half.quotients(), &[1, 1]);
        let two_fifths = cf_expand_normalized(&big(2, 5)).unwrap();
        assert_eq!(two_fifths.quotients(), &[2, 2]);
        let zero = cf_expand_normalized(&big(0, 1)).unwrap();
        assert!(zero.is_empty());
        assert!(zero.is_normalized());
        let third = cf_expand_normalized(&big(1, 3)).unwrap();
        assert_eq!(third.quotients(), &[2, 1]);
    }

    #[test]
    fn normalize_merges_trailing_ones() {
        let cf = ContinuedFraction::from_quotients(vec![1, 1, 1]).unwrap();
        let normalized = cf.clone().normalize();
        assert_eq!(normalized.quotients(), &[1, 2]);
        assert_eq!(cf.value(), normalized.value());
    }

    #[test]
    fn values_reconstruct() {
        for (n, d) in [(0i64, 1i64), (1, 2), (2, 5), (3, 5), (7, 19), (143, 251)] {
            let x = big(n, d);
            let canonical = ContinuedFraction::expand(&x).unwrap();
            assert_eq!(canonical.value(), x);
            let normalized = canonical.normalize();
            assert!(normalized.is_normalized());
            assert_eq!(normalized.value(), x);
        }
    }

    #[test]
    fn divisibility_examples() {
        let two_fifths = cf_expand_normalized(&big(2, 5)).unwrap();
        assert!(odd_index_divisible(&two_fifths, 2).unwrap());
        let half = cf_expand_normalized(&big(1, 2)).unwrap();
        assert!(!odd_index_divisible(&half, 2).unwrap());
        let zero = cf_expand_normalized(&big(0, 1)).unwrap();
        assert!(odd_index_divisible(&zero, 2).unwrap());
        assert!(odd_index_divisible(&zero, 17).unwrap());
    }

    #[test]
    fn divisibility_requires_normal_form() {
        let canonical = ContinuedFraction::expand(&big(1, 2)).unwrap();
        assert_eq!(odd_index_divisible(&canonical, 2), Err(Error::NotNormalized));
    }

    #[test]
    fn invalid_quotients_are_rejected() {
        assert!(ContinuedFraction::from_quotients(vec![2, 0, 1]).is_err());
        assert!(ContinuedFraction::from_quotients(vec![1]).is_err());
    }

    #[test]
    fn small_sweep_agrees_everywhere() {
        let report = characterization_sweep(2, 60).unwrap();
        assert!(report.fully_agrees(), "mismatches: {:?}", report.mismatches);
        let rows = characterization_rows(2, 5).unwrap();
        let two_fifths = rows
            .iter()
            .find(|r| r.numer == 2 && r.denom == 5)
            .unwrap();
        assert!(two_fifths.heavy && two_fifths.divisible && two_fifths.agree);
        let half = rows.iter().find(|r| r.numer == 1 && r.denom == 2).unwrap();
        assert!(!half.heavy && !half.divisible && half.agree);
        assert_eq!(half.first_failure, Some(1));
    }

    #[test]
    fn sweep_for_three_agrees_on_small_denominators() {
        let report = characterization_sweep(3, 40).unwrap();
        assert!(report.fully_agrees(), "mismatches: {:?}", report.mismatches);
    }
}
