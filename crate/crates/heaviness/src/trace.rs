//! Deficit traces: partial sums of an observable along an orbit with the
//! space average subtracted, and the predicates built on them. A point is
//! heavy through time N when none of its first N deficits is negative.

use std::fmt;

use crate::error::{Error, Result};
use crate::observable::Observable;
use crate::scalar::{NumericMode, Scalar};
use crate::systems::System;

/// The sequence `d_n = S_n(x) - n * mean` over a window of times that
/// always contains zero; `d_0 = 0` by convention.
#[derive(Clone, Debug, PartialEq)]
pub struct DeficitTrace<S> {
    start: i64,
    deficits: Vec<S>,
    mode: NumericMode<S>,
}

impl<S: Scalar> DeficitTrace<S> {
    pub(crate) fn from_deficits(start: i64, deficits: Vec<S>, mode: NumericMode<S>) -> Self {
        debug_assert!(start <= 0);
        debug_assert!(deficits.len() as i64 > -start);
        debug_assert!(deficits[(-start) as usize].is_zero());
        DeficitTrace {
            start,
            deficits,
            mode,
        }
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn end(&self) -> i64 {
        self.start + self.deficits.len() as i64 - 1
    }

    /// Largest nonnegative time in the trace.
    pub fn horizon(&self) -> u64 {
        self.end().max(0) as u64
    }

    pub fn deficit(&self, n: i64) -> &S {
        assert!(
            n >= self.start && n <= self.end(),
            "time {n} outside trace window {}..{}",
            self.start,
            self.end()
        );
        &self.deficits[(n - self.start) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &S)> {
        let start = self.start;
        self.deficits
            .iter()
            .enumerate()
            .map(move |(i, d)| (start + i as i64, d))
    }

    pub fn mode(&self) -> &NumericMode<S> {
        &self.mode
    }

    /// Override the zero-comparison slack. Exact traces stay exact.
    pub fn with_tolerance(mut self, tolerance: S) -> Self {
        if !S::EXACT {
            self.mode = NumericMode::Approximate { tolerance };
        }
        self
    }

    /// True when every deficit in the window counts as nonnegative.
    pub fn all_nonnegative(&self) -> bool {
        self.deficits.iter().all(|d| self.mode.nonnegative(d))
    }

    pub fn report(&self) -> HeavinessReport<S> {
        let mut first_failure = FirstFailure::BeyondHorizon;
        let mut min: Option<(i64, S)> = None;
        let mut zero_times = Vec::new();
        for (n, d) in self.iter() {
            if n < 1 {
                continue;
            }
            if first_failure == FirstFailure::BeyondHorizon && !self.mode.nonnegative(d) {
                first_failure = FirstFailure::At(n as u64);
            }
            if self.mode.counts_as_zero(d) {
                zero_times.push(n);
            }
            let better = match &min {
                None => true,
                Some((_, m)) => d < m,
            };
            if better {
                min = Some((n, d.clone()));
            }
        }
        let (argmin_time, min_deficit) = min.unwrap_or((0, S::zero()));
        HeavinessReport {
            first_failure,
            min_deficit,
            argmin_time,
            zero_times,
        }
    }
}

/// First time the deficit goes strictly negative, if it does within the
/// examined horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FirstFailure {
    At(u64),
    BeyondHorizon,
}

impl FirstFailure {
    pub fn is_beyond_horizon(&self) -> bool {
        matches!(self, FirstFailure::BeyondHorizon)
    }
}

impl fmt::Display for FirstFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FirstFailure::At(n) => write!(f, "{n}"),
            FirstFailure::BeyondHorizon => write!(f, "beyond-horizon"),
        }
    }
}

/// Summary of a one-sided trace: where it first fails, its worst value,
/// and the times at which it returns to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct HeavinessReport<S> {
    pub first_failure: FirstFailure,
    pub min_deficit: S,
    pub argmin_time: i64,
    /// Times `n >= 1` with deficit zero (within tolerance when
    /// approximate). Frequent zero returns are the telltale of averages
    /// that dominate without ever running strictly ahead.
    pub zero_times: Vec<i64>,
}

impl<S> HeavinessReport<S> {
    pub fn is_heavy(&self) -> bool {
        self.first_failure.is_beyond_horizon()
    }
}

/// Deficits `d_0..d_N` of the forward orbit of `x`.
pub fn deficit_trace<Sys, F, S>(
    system: &Sys,
    x: &Sys::Point,
    f: &F,
    horizon: u64,
) -> Result<DeficitTrace<S>>
where
    Sys: System,
    F: Observable<S, Point = Sys::Point>,
    S: Scalar,
{
    if horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    if !system.check_point(x) {
        return Err(Error::DomainMismatch);
    }
    let mean = f.mean();
    let mut deficits = Vec::with_capacity(horizon as usize + 1);
    deficits.push(S::zero());
    let mut d = S::zero();
    let mut p = x.clone();
    for _ in 0..horizon {
        d = d + (f.eval(&p) - &mean);
        deficits.push(d.clone());
        p = system.step(&p);
    }
    Ok(DeficitTrace {
        start: 0,
        deficits,
        mode: NumericMode::for_scalar(),
    })
}

/// Deficits over the window `n1..=n2` with `n1 <= 0 <= n2`; negative
/// times sum the inverse orbit with a leading minus sign, so that the
/// telescoping rule `d_n - d_{n-1} = f(T^{n-1} x) - mean` holds across
/// the whole window.
pub fn two_sided_trace<Sys, F, S>(
    system: &Sys,
    x: &Sys::Point,
    f: &F,
    n1: i64,
    n2: i64,
) -> Result<DeficitTrace<S>>
where
    Sys: System,
    F: Observable<S, Point = Sys::Point>,
    S: Scalar,
{
    if n1 > 0 || n2 < 0 {
        return Err(Error::InvalidWindow { n1, n2 });
    }
    if n1 < 0 && !system.invertible() {
        return Err(Error::NotInvertible);
    }
    if !system.check_point(x) {
        return Err(Error::DomainMismatch);
    }
    let mean = f.mean();

    let mut forward = Vec::with_capacity((n2 + 1) as usize);
    forward.push(S::zero());
    let mut d = S::zero();
    let mut p = x.clone();
    for _ in 0..n2 {
        d = d + (f.eval(&p) - &mean);
        forward.push(d.clone());
        p = system.step(&p);
    }

    let mut backward = Vec::with_capacity((-n1) as usize);
    let mut d = S::zero();
    let mut p = x.clone();
    for _ in 0..(-n1) {
        p = system.back_step(&p).ok_or(Error::NotInvertible)?;
        d = d - (f.eval(&p) - &mean);
        backward.push(d.clone());
    }

    let mut deficits = Vec::with_capacity(backward.len() + forward.len());
    deficits.extend(backward.into_iter().rev());
    deficits.extend(forward);
    Ok(DeficitTrace {
        start: n1,
        deficits,
        mode: NumericMode::for_scalar(),
    })
}

/// Is `x` heavy through time `horizon`? Time zero is vacuously heavy for
/// every point.
pub fn heavy_through<Sys, F, S>(system: &Sys, x: &Sys::Point, f: &F, horizon: u64) -> Result<bool>
where
    Sys: System,
    F: Observable<S, Point = Sys::Point>,
    S: Scalar,
{
    if !system.check_point(x) {
        return Err(Error::DomainMismatch);
    }
    if horizon == 0 {
        return Ok(true);
    }
    let mode = NumericMode::<S>::for_scalar();
    let mean = f.mean();
    let mut d = S::zero();
    let mut p = x.clone();
    for _ in 0..horizon {
        d = d + (f.eval(&p) - &mean);
        if !mode.nonnegative(&d) {
            return Ok(false);
        }
        p = system.step(&p);
    }
    Ok(true)
}

/// Is `x` in the two-sided heavy window: deficits nonnegative for every
/// time in `n1..=n2`?
pub fn heavy_window<Sys, F, S>(
    system: &Sys,
    x: &Sys::Point,
    f: &F,
    n1: i64,
    n2: i64,
) -> Result<bool>
where
    Sys: System,
    F: Observable<S, Point = Sys::Point>,
    S: Scalar,
{
    Ok(two_sided_trace(system, x, f, n1, n2)?.all_nonnegative())
}

/// Worst deficit over times `1..=horizon`, without materializing the
/// trace. Agrees with `deficit_trace(..)?.report().min_deficit`.
pub(crate) fn orbit_min_deficit<Sys, F, S>(
    system: &Sys,
    x: &Sys::Point,
    f: &F,
    horizon: u64,
) -> Result<S>
where
    Sys: System,
    F: Observable<S, Point = Sys::Point>,
    S: Scalar,
{
    if horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    if !system.check_point(x) {
        return Err(Error::DomainMismatch);
    }
    let mean = f.mean();
    let mut d = S::zero();
    let mut p = x.clone();
    let mut min: Option<S> = None;
    for _ in 0..horizon {
        d = d + (f.eval(&p) - &mean);
        let better = match &min {
            None => true,
            Some(m) => d < *m,
        };
        if better {
            min = Some(d.clone());
        }
        p = system.step(&p);
    }
    Ok(min.expect("horizon is positive"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite::FiniteSystem;
    use crate::observable::{Constant, Indicator, IntervalUnion};
    use crate::scalar::{Rational64, Scalar};
    use crate::systems::circle::{rotation_system, times_m_system, CirclePoint};
    use num_traits::Zero;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::from_fraction(n, d)
    }

    fn two_point_identity() -> FiniteSystem<Rational64> {
        FiniteSystem::uniform(vec![0, 1], vec![r(1, 1), r(-1, 1)]).unwrap()
    }

    fn three_cycle() -> FiniteSystem<Rational64> {
        FiniteSystem::uniform(vec![1, 2, 0], vec![r(2, 1), r(-1, 1), r(-1, 1)]).unwrap()
    }

    /// Independent enumerator: recompute each deficit from scratch by
    /// composing the map, never reusing the running accumulation.
    fn naive_deficit<Sys, F>(system: &Sys, x: &Sys::Point, f: &F, n: i64) -> Rational64
    where
        Sys: System,
        F: Observable<Rational64, Point = Sys::Point>,
    {
        let mean = f.mean();
        let mut sum = Rational64::from_int(0);
        if n >= 0 {
            let mut p = x.clone();
            for _ in 0..n {
                sum = sum + f.eval(&p);
                p = system.step(&p);
            }
        } else {
            let mut p = x.clone();
            for _ in 0..(-n) {
                p = system.back_step(&p).unwrap();
                sum = sum - f.eval(&p);
            }
        }
        sum - mean * Rational64::from_int(n)
    }

    #[test]
    fn identity_plus_one_walks_upward() {
        let sys = two_point_identity();
        let trace = deficit_trace(&sys, &0usize, &sys.observable(), 3).unwrap();
        let got: Vec<_> = trace.iter().map(|(_, d)| d.clone()).collect();
        assert_eq!(got, vec![r(0, 1), r(1, 1), r(2, 1), r(3, 1)]);
    }

    #[test]
    fn constant_observable_has_zero_deficits() {
        let sys = rotation_system(CirclePoint::from_fraction(2, 7));
        let f: Constant<Rational64, CirclePoint<Rational64>> = Constant::new(r(5, 3));
        let trace = deficit_trace(&sys, &CirclePoint::zero(), &f, 5).unwrap();
        assert!(trace.iter().all(|(_, d)| d.is_zero()));
    }

    #[test]
    fn third_rotation_trace() {
        let sys = rotation_system(CirclePoint::from_fraction(1, 3));
        let f = Indicator::new(IntervalUnion::single(r(0, 1), r(1, 3)).unwrap());
        let trace = deficit_trace(&sys, &CirclePoint::zero(), &f, 3).unwrap();
        let got: Vec<_> = trace.iter().map(|(_, d)| d.clone()).collect();
        assert_eq!(got, vec![r(0, 1), r(2, 3), r(1, 3), r(0, 1)]);
        let report = trace.report();
        assert!(report.is_heavy());
        assert_eq!(report.zero_times, vec![3]);
    }

    #[test]
    fn zero_horizon_is_rejected() {
        let sys = two_point_identity();
        assert_eq!(
            deficit_trace(&sys, &0usize, &sys.observable(), 0).unwrap_err(),
            Error::ZeroHorizon
        );
    }

    #[test]
    fn out_of_domain_atom_is_rejected() {
        let sys = two_point_identity();
        assert_eq!(
            deficit_trace(&sys, &5usize, &sys.observable(), 3).unwrap_err(),
            Error::DomainMismatch
        );
    }

    #[test]
    fn report_flags_first_failure() {
        let sys = two_point_identity();
        let trace = deficit_trace(&sys, &1usize, &sys.observable(), 4).unwrap();
        let report = trace.report();
        assert_eq!(report.first_failure, FirstFailure::At(1));
        assert!(!report.is_heavy());
        assert_eq!(report.min_deficit, r(-4, 1));
        assert_eq!(report.argmin_time, 4);
    }

    #[test]
    fn identity_two_sided_is_linear() {
        let sys = two_point_identity();
        let trace = two_sided_trace(&sys, &0usize, &sys.observable(), -2, 2).unwrap();
        for (n, d) in trace.iter() {
            assert_eq!(*d, Rational64::from_int(n));
        }
        let trace1 = two_sided_trace(&sys, &1usize, &sys.observable(), -5, 5).unwrap();
        for (n, d) in trace1.iter() {
            assert_eq!(*d, Rational64::from_int(-n));
        }
    }

    #[test]
    fn constant_two_sided_is_flat() {
        let sys = rotation_system(CirclePoint::from_fraction(1, 5));
        let f: Constant<Rational64, CirclePoint<Rational64>> = Constant::new(r(-2, 9));
        let trace = two_sided_trace(&sys, &CirclePoint::zero(), &f, -4, 4).unwrap();
        assert!(trace.iter().all(|(_, d)| d.is_zero()));
    }

    #[test]
    fn three_cycle_two_sided_matches_the_enumerator() {
        let sys = three_cycle();
        let obs = sys.observable();
        let trace = two_sided_trace(&sys, &0usize, &obs, -3, 3).unwrap();
        let got: Vec<_> = trace.iter().map(|(_, d)| d.clone()).collect();
        let expected = vec![r(0, 1), r(2, 1), r(1, 1), r(0, 1), r(2, 1), r(1, 1), r(0, 1)];
        assert_eq!(got, expected);
        for (n, d) in trace.iter() {
            assert_eq!(*d, naive_deficit(&sys, &0usize, &obs, n), "time {n}");
        }
    }

    #[test]
    fn two_sided_needs_an_inverse() {
        let sys = times_m_system::<Rational64>(2).unwrap();
        let f = Indicator::new(IntervalUnion::single(r(0, 1), r(1, 2)).unwrap());
        let err = two_sided_trace(&sys, &CirclePoint::zero(), &f, -1, 1).unwrap_err();
        assert_eq!(err, Error::NotInvertible);
        // Purely forward windows do not need one.
        assert!(heavy_window(&sys, &CirclePoint::zero(), &f, 0, 3).unwrap());
    }

    #[test]
    fn heavy_through_examples() {
        let sys = two_point_identity();
        let obs = sys.observable();
        assert!(heavy_through(&sys, &0usize, &obs, 0).unwrap());
        assert!(heavy_through(&sys, &1usize, &obs, 0).unwrap());
        assert!(!heavy_through(&sys, &1usize, &obs, 1).unwrap());

        let rot = rotation_system(CirclePoint::from_fraction(1, 3));
        let f = Indicator::new(IntervalUnion::single(r(0, 1), r(1, 3)).unwrap());
        assert!(heavy_through(&rot, &CirclePoint::zero(), &f, 3).unwrap());
    }

    #[test]
    fn heavy_window_examples() {
        let sys = two_point_identity();
        let obs = sys.observable();
        assert!(!heavy_window(&sys, &0usize, &obs, -1, 1).unwrap());
        assert!(heavy_window(&sys, &0usize, &obs, 0, 0).unwrap());

        let cyc = three_cycle();
        assert!(heavy_window(&cyc, &0usize, &cyc.observable(), -3, 3).unwrap());
    }

    #[test]
    fn streaming_min_matches_the_report() {
        let sys = three_cycle();
        let obs = sys.observable();
        for atom in 0..3usize {
            let trace = deficit_trace(&sys, &atom, &obs, 9).unwrap();
            let streamed = orbit_min_deficit(&sys, &atom, &obs, 9).unwrap();
            assert_eq!(streamed, trace.report().min_deficit);
        }
    }

    #[test]
    fn report_invariant_heavy_iff_min_nonnegative() {
        let sys = three_cycle();
        let obs = sys.observable();
        for atom in 0..3usize {
            let trace = deficit_trace(&sys, &atom, &obs, 7).unwrap();
            let report = trace.report();
            assert_eq!(
                report.is_heavy(),
                trace.mode().nonnegative(&report.min_deficit)
            );
            assert_eq!(
                report.is_heavy(),
                heavy_through(&sys, &atom, &obs, 7).unwrap()
            );
        }
    }
}
