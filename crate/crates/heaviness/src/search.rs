//! Finite-horizon searches: the best heavy candidate in a list, and the
//! orbit walk that manufactures a point heavy on a symmetric window.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::observable::Observable;
use crate::scalar::Scalar;
use crate::systems::System;
use crate::trace::{deficit_trace, heavy_window, orbit_min_deficit, HeavinessReport};

/// Winner of a candidate sweep.
#[derive(Clone, Debug)]
pub struct CandidateOutcome<P, S> {
    pub index: usize,
    pub point: P,
    pub report: HeavinessReport<S>,
}

/// The candidate maximizing the worst deficit over times `1..=horizon`;
/// ties go to the smallest index. The caller decides whether the winner
/// is actually heavy (worst deficit nonnegative).
pub fn find_heavy_candidate<Sys, F, S>(
    system: &Sys,
    f: &F,
    horizon: u64,
    candidates: &[Sys::Point],
) -> Result<CandidateOutcome<Sys::Point, S>>
where
    Sys: System + Sync,
    Sys::Point: Send + Sync,
    F: Observable<S, Point = Sys::Point> + Sync,
    S: Scalar,
{
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let mins: Vec<S> = candidates
        .par_iter()
        .map(|x| orbit_min_deficit(system, x, f, horizon))
        .collect::<Result<_>>()?;

    let mut best = 0usize;
    for (i, m) in mins.iter().enumerate().skip(1) {
        if m.partial_cmp(&mins[best]) == Some(Ordering::Greater) {
            best = i;
        }
    }
    let report = deficit_trace(system, &candidates[best], f, horizon)?.report();
    Ok(CandidateOutcome {
        index: best,
        point: candidates[best].clone(),
        report,
    })
}

/// A point produced by [`two_sided_search`], with the provenance of the
/// construction and the symmetric window it was verified on.
#[derive(Clone, Debug)]
pub struct TwoSidedWitness<P, S> {
    pub point: P,
    /// Largest `w <= requested` with the window `(-w, w)` verified heavy.
    pub verified_window: u64,
    /// Orbit time whose point was heavy on the backward window.
    pub neg_entry: u64,
    /// Orbit time whose point was heavy on the forward window.
    pub pos_entry: u64,
    /// Orbit time of the deficit minimum between the two entries; the
    /// returned point is the orbit point at this time.
    pub pivot: u64,
    pub pivot_deficit: S,
}

/// Walk the forward orbit of `seed` looking for a time `i` whose point is
/// heavy on `(-window, 0)` and a later time `j` whose point is heavy on
/// `(0, window)`. When such a pair exists within `max_steps`, return the
/// orbit point at the time `k` in `i..=j` minimizing the seed's deficit
/// (first minimizer on ties), verified on the largest symmetric window it
/// satisfies. The minimizing choice makes every deficit of the returned
/// point a difference `d_{n+k} - d_k >= 0` inside `i..=j`, and the two
/// entry points extend the window by `window` on each side.
pub fn two_sided_search<Sys, F, S>(
    system: &Sys,
    f: &F,
    window: u64,
    seed: &Sys::Point,
    max_steps: u64,
) -> Result<Option<TwoSidedWitness<Sys::Point, S>>>
where
    Sys: System,
    F: Observable<S, Point = Sys::Point>,
    S: Scalar,
{
    if max_steps == 0 {
        return Err(Error::ZeroSteps);
    }
    if !system.invertible() {
        return Err(Error::NotInvertible);
    }
    if !system.check_point(seed) {
        return Err(Error::DomainMismatch);
    }

    let mut orbit = Vec::with_capacity(max_steps as usize + 1);
    orbit.push(seed.clone());
    for m in 0..max_steps as usize {
        let next = system.step(&orbit[m]);
        orbit.push(next);
    }
    let trace = deficit_trace(system, seed, f, max_steps)?;

    let w = window as i64;
    let mut neg_entry: Option<u64> = None;
    let mut pair: Option<(u64, u64)> = None;
    for (m, point) in orbit.iter().enumerate() {
        if neg_entry.is_some()
            && m as u64 > neg_entry.unwrap()
            && heavy_window(system, point, f, 0, w)?
        {
            pair = Some((neg_entry.unwrap(), m as u64));
            break;
        }
        if neg_entry.is_none() && heavy_window(system, point, f, -w, 0)? {
            neg_entry = Some(m as u64);
        }
    }
    let Some((i, j)) = pair else {
        return Ok(None);
    };

    let mut pivot = i;
    for k in i..=j {
        if trace.deficit(k as i64) < trace.deficit(pivot as i64) {
            pivot = k;
        }
    }
    let point = orbit[pivot as usize].clone();

    for verified in (0..=window).rev() {
        let v = verified as i64;
        if heavy_window(system, &point, f, -v, v)? {
            return Ok(Some(TwoSidedWitness {
                point,
                verified_window: verified,
                neg_entry: i,
                pos_entry: j,
                pivot,
                pivot_deficit: trace.deficit(pivot as i64).clone(),
            }));
        }
    }
    unreachable!("the empty window is always heavy");
}
