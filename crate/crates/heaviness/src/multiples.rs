//! Heaviness of the bare sequence x, 2x, 3x, ... for interval targets,
//! with an exact all-horizons decision for rational x: the sequence is
//! q-periodic, so one period of deficits plus the per-period surplus
//! settles every horizon at once.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::observable::IntervalUnion;
use crate::scalar::{NumericMode, Rational, Scalar};
use crate::systems::circle::CirclePoint;
use crate::trace::DeficitTrace;

/// Deficits `d_n = #{1 <= i <= n : i x mod 1 in target} - n * length`.
/// The sequence starts at `1 * x`.
pub fn multiples_deficits<S: Scalar>(
    x: &CirclePoint<S>,
    target: &IntervalUnion<S>,
    horizon: u64,
) -> Result<DeficitTrace<S>> {
    if horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    let length = target.total_length().clone();
    let mut deficits = Vec::with_capacity(horizon as usize + 1);
    deficits.push(S::zero());
    let mut d = S::zero();
    let mut point = x.clone();
    for _ in 0..horizon {
        let hit = if target.contains(&point) {
            S::one()
        } else {
            S::zero()
        };
        d = d + (hit - &length);
        deficits.push(d.clone());
        point = point.add(x);
    }
    Ok(DeficitTrace::from_deficits(
        0,
        deficits,
        NumericMode::for_scalar(),
    ))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MultiplesVerdict {
    Heavy,
    NotHeavy { first_failure: u64 },
}

/// Outcome of the exact periodic decision.
#[derive(Clone, Debug)]
pub struct MultiplesDecision {
    pub x: Rational,
    /// Denominator of x in lowest terms; the sequence's period.
    pub period: u64,
    /// Per-period surplus: indicator hits in one period minus
    /// `period * length`.
    pub period_surplus: Rational,
    pub verdict: MultiplesVerdict,
}

impl MultiplesDecision {
    pub fn is_heavy(&self) -> bool {
        self.verdict == MultiplesVerdict::Heavy
    }
}

const MAX_EXACT_PERIOD: u64 = 100_000_000;

/// Decide heaviness of x, 2x, 3x, ... for the target over every horizon
/// at once. The sequence is periodic with the denominator's period, so
/// heaviness holds exactly when no deficit in the first period is
/// negative and the per-period surplus is nonnegative; otherwise the
/// smallest failing horizon is located exactly.
pub fn heavy_multiples_exact(
    x: &Rational,
    target: &IntervalUnion<Rational>,
) -> Result<MultiplesDecision> {
    if x.is_negative() || *x >= Rational::one() {
        return Err(Error::OutOfRange(format!("x = {x} is outside [0, 1)")));
    }
    let p = x.numer().clone();
    let q_big = x.denom().clone();
    let q = q_big
        .to_u64()
        .filter(|&q| q <= MAX_EXACT_PERIOD)
        .ok_or_else(|| {
            Error::OutOfRange(format!("period {q_big} too large for the exact decision"))
        })?;

    // Common denominator for x and every endpoint; all arithmetic is
    // integer once scaled by it.
    let mut modulus = q_big.clone();
    for (a, b) in target.intervals() {
        modulus = modulus.lcm(a.denom());
        modulus = modulus.lcm(b.denom());
    }
    let delta = &p * (&modulus / &q_big);
    let spans: Vec<(BigInt, BigInt)> = target
        .intervals()
        .iter()
        .map(|(a, b)| {
            (
                a.numer() * (&modulus / a.denom()),
                b.numer() * (&modulus / b.denom()),
            )
        })
        .collect();
    let length = target.total_length();
    let scaled_length = length.numer() * (&modulus / length.denom());

    let (first_failure, surplus_hat) = match (
        modulus.to_i64(),
        delta.to_i128(),
        scaled_length.to_i128(),
    ) {
        (Some(m), Some(d), Some(l)) => {
            let spans_small: Vec<(i128, i128)> = spans
                .iter()
                .map(|(a, b)| (a.to_i128().unwrap(), b.to_i128().unwrap()))
                .collect();
            let (first, surplus, _) = period_scan(q, d, i128::from(m), &spans_small, l, false);
            (first, BigInt::from(surplus))
        }
        _ => {
            let (first, surplus, _) =
                period_scan(q, delta.clone(), modulus.clone(), &spans, scaled_length.clone(), false);
            (first, surplus)
        }
    };

    let period_surplus = Rational::new(surplus_hat.clone(), modulus.clone());
    let verdict = match first_failure {
        Some(n) => MultiplesVerdict::NotHeavy { first_failure: n },
        None if !surplus_hat.is_negative() => MultiplesVerdict::Heavy,
        None => {
            // First period clean but the surplus drifts down: locate the
            // first horizon where the linear drift goes negative.
            let (_, surplus, prefix) =
                period_scan(q, delta, modulus.clone(), &spans, scaled_length, true);
            let down = -surplus;
            let mut best: Option<BigInt> = None;
            for (r, d_r) in prefix.iter().enumerate().take(q as usize) {
                let periods = d_r.div_floor(&down) + 1;
                let n = periods * BigInt::from(q) + BigInt::from(r as u64);
                if best.as_ref().is_none_or(|b| n < *b) {
                    best = Some(n);
                }
            }
            let n = best
                .and_then(|b| b.to_u64())
                .ok_or_else(|| Error::OutOfRange("drift horizon overflow".into()))?;
            MultiplesVerdict::NotHeavy { first_failure: n }
        }
    };
    Ok(MultiplesDecision {
        x: x.clone(),
        period: q,
        period_surplus,
        verdict,
    })
}

/// One period of scaled deficits. Returns the first failing time within
/// the period, the scaled per-period surplus, and (when asked) the
/// scaled deficits at times `0..=q`.
fn period_scan<I: Integer + Clone>(
    q: u64,
    delta: I,
    modulus: I,
    spans: &[(I, I)],
    scaled_length: I,
    keep_prefix: bool,
) -> (Option<u64>, I, Vec<I>) {
    let gain = modulus.clone() - scaled_length.clone();
    let mut position = I::zero();
    let mut deficit = I::zero();
    let mut first_failure = None;
    let mut prefix = Vec::new();
    if keep_prefix {
        prefix.reserve(q as usize + 1);
        prefix.push(I::zero());
    }
    for n in 1..=q {
        position = position + delta.clone();
        if position >= modulus {
            position = position - modulus.clone();
        }
        let hit = spans.iter().any(|(a, b)| *a <= position && position < *b);
        deficit = if hit {
            deficit + gain.clone()
        } else {
            deficit - scaled_length.clone()
        };
        if first_failure.is_none() && deficit < I::zero() {
            first_failure = Some(n);
        }
        if keep_prefix {
            prefix.push(deficit.clone());
        }
    }
    (first_failure, deficit, prefix)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanMode {
    /// Decide every horizon via the periodic decision.
    Exact,
    /// Check deficits through a finite horizon only.
    FiniteHorizon(u64),
}

/// Survivors of a grid scan: the points `i/grid` heavy for the target.
#[derive(Clone, Debug)]
pub struct MultiplesScan {
    pub grid: u64,
    pub mode: ScanMode,
    pub survivors: Vec<Rational>,
    pub fraction: Rational,
}

pub fn heavy_multiples_scan(
    target: &IntervalUnion<Rational>,
    grid: u64,
    mode: ScanMode,
) -> Result<MultiplesScan> {
    if grid == 0 {
        return Err(Error::OutOfRange("grid resolution must be at least 1".into()));
    }
    if let ScanMode::FiniteHorizon(0) = mode {
        return Err(Error::ZeroHorizon);
    }
    let verdicts: Vec<bool> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let x = Rational::new(BigInt::from(i), BigInt::from(grid));
            match mode {
                ScanMode::Exact => Ok(heavy_multiples_exact(&x, target)?.is_heavy()),
                ScanMode::FiniteHorizon(n) => {
                    let trace = multiples_deficits(&CirclePoint::new(x), target, n)?;
                    Ok(trace.all_nonnegative())
                }
            }
        })
        .collect::<Result<_>>()?;
    let survivors: Vec<Rational> = verdicts
        .iter()
        .enumerate()
        .filter(|(_, &ok)| ok)
        .map(|(i, _)| Rational::new(BigInt::from(i as u64), BigInt::from(grid)))
        .collect();
    let fraction = Rational::new(BigInt::from(survivors.len() as u64), BigInt::from(grid));
    Ok(MultiplesScan {
        grid,
        mode,
        survivors,
        fraction,
    })
}
