//! Observables: functions evaluated along orbits, each carrying its
//! space average so traces can subtract it.

use std::fmt;
use std::marker::PhantomData;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::systems::circle::CirclePoint;
use crate::systems::torus::TorusPoint;

/// A function paired with its integral against the invariant measure.
pub trait Observable<S: Scalar> {
    type Point;

    fn eval(&self, point: &Self::Point) -> S;

    /// The space average subtracted from partial sums.
    fn mean(&self) -> S;
}

/// Finite union of half-open circle intervals `[a, b)`, pairwise
/// disjoint and sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalUnion<S> {
    intervals: Vec<(S, S)>,
    total_length: S,
}

impl<S: Scalar> IntervalUnion<S> {
    pub fn new(mut intervals: Vec<(S, S)>) -> Result<Self> {
        for (a, b) in &intervals {
            let ok = *a >= S::zero() && a < b && *b <= S::one();
            if !ok {
                return Err(Error::InvalidObservable(format!(
                    "interval [{a}, {b}) is not inside [0, 1)"
                )));
            }
        }
        intervals.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("endpoints are ordered"));
        for pair in intervals.windows(2) {
            if pair[1].0 < pair[0].1 {
                return Err(Error::InvalidObservable(format!(
                    "intervals [{}, {}) and [{}, {}) overlap",
                    pair[0].0, pair[0].1, pair[1].0, pair[1].1
                )));
            }
        }
        let mut total_length = S::zero();
        for (a, b) in &intervals {
            total_length = total_length + (b.clone() - a);
        }
        Ok(IntervalUnion {
            intervals,
            total_length,
        })
    }

    pub fn single(a: S, b: S) -> Result<Self> {
        Self::new(vec![(a, b)])
    }

    /// The whole circle `[0, 1)`.
    pub fn full() -> Self {
        IntervalUnion {
            intervals: vec![(S::zero(), S::one())],
            total_length: S::one(),
        }
    }

    pub fn intervals(&self) -> &[(S, S)] {
        &self.intervals
    }

    pub fn total_length(&self) -> &S {
        &self.total_length
    }

    pub fn contains_value(&self, x: &S) -> bool {
        self.intervals.iter().any(|(a, b)| a <= x && x < b)
    }

    pub fn contains(&self, point: &CirclePoint<S>) -> bool {
        self.contains_value(point.value())
    }
}

impl<S: Scalar> fmt::Display for IntervalUnion<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (a, b)) in self.intervals.iter().enumerate() {
            if i > 0 {
                write!(f, ";")?;
            }
            write!(f, "[{a},{b})")?;
        }
        Ok(())
    }
}

/// Indicator of an interval union; the mean is its total length.
#[derive(Clone, Debug)]
pub struct Indicator<S> {
    union: IntervalUnion<S>,
}

impl<S: Scalar> Indicator<S> {
    pub fn new(union: IntervalUnion<S>) -> Self {
        Indicator { union }
    }

    pub fn union(&self) -> &IntervalUnion<S> {
        &self.union
    }
}

impl<S: Scalar> Observable<S> for Indicator<S> {
    type Point = CirclePoint<S>;

    fn eval(&self, point: &Self::Point) -> S {
        if self.union.contains(point) {
            S::one()
        } else {
            S::zero()
        }
    }

    fn mean(&self) -> S {
        self.union.total_length().clone()
    }
}

/// Indicator applied to the last coordinate of a torus point, matching
/// product sets `circle x ... x circle x target`.
#[derive(Clone, Debug)]
pub struct LastCoordIndicator<S> {
    union: IntervalUnion<S>,
}

impl<S: Scalar> LastCoordIndicator<S> {
    pub fn new(union: IntervalUnion<S>) -> Self {
        LastCoordIndicator { union }
    }
}

impl<S: Scalar> Observable<S> for LastCoordIndicator<S> {
    type Point = TorusPoint<S>;

    fn eval(&self, point: &Self::Point) -> S {
        if self.union.contains(point.last()) {
            S::one()
        } else {
            S::zero()
        }
    }

    fn mean(&self) -> S {
        self.union.total_length().clone()
    }
}

/// Piecewise-constant circle function. `values[i]` holds on
/// `[breakpoints[i], breakpoints[i+1])`, wrapping past 1 back to the
/// first breakpoint, so the final segment also covers `[0, breakpoints[0])`.
#[derive(Clone, Debug)]
pub struct StepFunction<S> {
    breakpoints: Vec<S>,
    values: Vec<S>,
    mean: S,
}

impl<S: Scalar> StepFunction<S> {
    pub fn new(breakpoints: Vec<S>, values: Vec<S>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(Error::InvalidObservable(
                "need equally many breakpoints and values, at least one each".into(),
            ));
        }
        for b in &breakpoints {
            if *b < S::zero() || *b >= S::one() {
                return Err(Error::InvalidObservable(format!(
                    "breakpoint {b} outside [0, 1)"
                )));
            }
        }
        for pair in breakpoints.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidObservable(
                    "breakpoints must be strictly increasing".into(),
                ));
            }
        }
        let m = breakpoints.len();
        let mut mean = S::zero();
        for i in 0..m {
            let len = if i + 1 < m {
                breakpoints[i + 1].clone() - &breakpoints[i]
            } else {
                // Wrap segment: up to 1 and around to the first breakpoint.
                S::one() - &breakpoints[m - 1] + &breakpoints[0]
            };
            mean = mean + values[i].clone() * len;
        }
        Ok(StepFunction {
            breakpoints,
            values,
            mean,
        })
    }
}

impl<S: Scalar> Observable<S> for StepFunction<S> {
    type Point = CirclePoint<S>;

    fn eval(&self, point: &Self::Point) -> S {
        let x = point.value();
        let mut idx = self.values.len() - 1; // wrap segment by default
        for (i, b) in self.breakpoints.iter().enumerate() {
            if b <= x {
                idx = i;
            } else {
                break;
            }
        }
        self.values[idx].clone()
    }

    fn mean(&self) -> S {
        self.mean.clone()
    }
}

/// Values on the atoms of a finite system.
#[derive(Clone, Debug)]
pub struct AtomTable<S> {
    values: Vec<S>,
    mean: S,
}

impl<S: Scalar> AtomTable<S> {
    pub fn with_mean(values: Vec<S>, mean: S) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidObservable("empty value table".into()));
        }
        Ok(AtomTable { values, mean })
    }

    /// Mean computed as the weight-weighted sum of the values.
    pub fn weighted(values: Vec<S>, weights: &[S]) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::InvalidObservable(format!(
                "{} values against {} weights",
                values.len(),
                weights.len()
            )));
        }
        let mut mean = S::zero();
        for (v, w) in values.iter().zip(weights) {
            mean = mean + v.clone() * w;
        }
        Self::with_mean(values, mean)
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }
}

impl<S: Scalar> Observable<S> for AtomTable<S> {
    type Point = usize;

    fn eval(&self, point: &Self::Point) -> S {
        self.values[*point].clone()
    }

    fn mean(&self) -> S {
        self.mean.clone()
    }
}

/// Constant function; its mean is the constant itself.
#[derive(Clone, Debug)]
pub struct Constant<S, P> {
    value: S,
    _point: PhantomData<fn(&P)>,
}

impl<S: Scalar, P> Constant<S, P> {
    pub fn new(value: S) -> Self {
        Constant {
            value,
            _point: PhantomData,
        }
    }
}

impl<S: Scalar, P> Observable<S> for Constant<S, P> {
    type Point = P;

    fn eval(&self, _point: &Self::Point) -> S {
        self.value.clone()
    }

    fn mean(&self) -> S {
        self.value.clone()
    }
}
