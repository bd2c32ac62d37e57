//! Exact finite measure-preserving systems: weighted atoms permuted by an
//! invertible map, carrying a zero-mean rational observable. Everything
//! here is computed in exact arithmetic; no tolerances appear.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::observable::AtomTable;
use crate::scalar::{Rational, Scalar};
use crate::systems::System;
use crate::trace::{deficit_trace, heavy_through, two_sided_trace, FirstFailure};

/// Atoms `0..n` with positive weights summing to one, an invertible map
/// given by a permutation, and observable values of weighted sum zero.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSystem<S = Rational> {
    perm: Vec<usize>,
    inverse: Vec<usize>,
    weights: Vec<S>,
    f_values: Vec<S>,
}

impl<S: Scalar> FiniteSystem<S> {
    pub fn new(perm: Vec<usize>, weights: Vec<S>, f_values: Vec<S>) -> Result<Self> {
        if !S::EXACT {
            return Err(Error::ExactnessRequired(
                "finite systems only support exact scalars",
            ));
        }
        let n = perm.len();
        if n == 0 {
            return Err(Error::InvalidSystem("need at least one atom".into()));
        }
        if weights.len() != n || f_values.len() != n {
            return Err(Error::InvalidSystem(format!(
                "atom count mismatch: {} in permutation, {} weights, {} values",
                n,
                weights.len(),
                f_values.len()
            )));
        }
        let mut inverse = vec![usize::MAX; n];
        for (i, &img) in perm.iter().enumerate() {
            if img >= n {
                return Err(Error::InvalidSystem(format!(
                    "permutation sends {i} to {img}, outside 0..{n}"
                )));
            }
            if inverse[img] != usize::MAX {
                return Err(Error::InvalidSystem(format!(
                    "permutation is not a bijection: {img} hit twice"
                )));
            }
            inverse[img] = i;
        }
        let mut weight_sum = S::zero();
        for w in &weights {
            if !w.is_positive() {
                return Err(Error::InvalidSystem(format!("weight {w} is not positive")));
            }
            weight_sum = weight_sum + w;
        }
        if !weight_sum.is_one() {
            return Err(Error::InvalidSystem(format!(
                "weights sum to {weight_sum}, expected 1"
            )));
        }
        let mut integral = S::zero();
        for (v, w) in f_values.iter().zip(&weights) {
            integral = integral + v.clone() * w;
        }
        if !integral.is_zero() {
            return Err(Error::InvalidSystem(format!(
                "observable integrates to {integral}, expected 0"
            )));
        }
        Ok(FiniteSystem {
            perm,
            inverse,
            weights,
            f_values,
        })
    }

    /// Uniform weights `1/n`.
    pub fn uniform(perm: Vec<usize>, f_values: Vec<S>) -> Result<Self> {
        let n = perm.len();
        if n == 0 {
            return Err(Error::InvalidSystem("need at least one atom".into()));
        }
        let w = S::from_fraction(1, n as i64);
        Self::new(perm, vec![w; n], f_values)
    }

    pub fn atoms(&self) -> usize {
        self.perm.len()
    }

    pub fn weight(&self, atom: usize) -> &S {
        &self.weights[atom]
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn f_value(&self, atom: usize) -> &S {
        &self.f_values[atom]
    }

    pub fn f_values(&self) -> &[S] {
        &self.f_values
    }

    pub fn image(&self, atom: usize) -> usize {
        self.perm[atom]
    }

    pub fn preimage(&self, atom: usize) -> usize {
        self.inverse[atom]
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// The system's observable as a table; its mean is exactly zero by
    /// the construction invariant.
    pub fn observable(&self) -> AtomTable<S> {
        AtomTable::with_mean(self.f_values.clone(), S::zero()).expect("systems are nonempty")
    }

    /// Number of permutation cycles; one cycle is the finite stand-in
    /// for ergodicity.
    pub fn cycle_count(&self) -> usize {
        let n = self.atoms();
        let mut seen = vec![false; n];
        let mut cycles = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            cycles += 1;
            let mut a = start;
            while !seen[a] {
                seen[a] = true;
                a = self.perm[a];
            }
        }
        cycles
    }
}

impl<S: Scalar> System for FiniteSystem<S> {
    type Point = usize;

    fn step(&self, point: &usize) -> usize {
        self.perm[*point]
    }

    fn back_step(&self, point: &usize) -> Option<usize> {
        Some(self.inverse[*point])
    }

    fn invertible(&self) -> bool {
        true
    }

    fn check_point(&self, point: &usize) -> bool {
        *point < self.atoms()
    }
}

impl FiniteSystem<Rational> {
    /// Plain-text record: atom count, permutation, weights and values as
    /// exact fraction strings.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "atoms {}", self.atoms());
        let _ = writeln!(
            out,
            "perm {}",
            self.perm
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        );
        let _ = writeln!(
            out,
            "weights {}",
            self.weights
                .iter()
                .map(|w| w.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        );
        let _ = writeln!(
            out,
            "f {}",
            self.f_values
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        );
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut atoms: Option<usize> = None;
        let mut perm: Option<Vec<usize>> = None;
        let mut weights: Option<Vec<Rational>> = None;
        let mut f_values: Option<Vec<Rational>> = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let key = fields.next().unwrap_or_default();
            let rest: Vec<&str> = fields.collect();
            match key {
                "atoms" => {
                    let n = rest
                        .first()
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or_else(|| Error::Parse(format!("bad atoms line: {line}")))?;
                    atoms = Some(n);
                }
                "perm" => {
                    let p = rest
                        .iter()
                        .map(|s| s.parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|e| Error::Parse(format!("bad permutation: {e}")))?;
                    perm = Some(p);
                }
                "weights" => {
                    weights = Some(parse_rationals(&rest)?);
                }
                "f" => {
                    f_values = Some(parse_rationals(&rest)?);
                }
                other => {
                    return Err(Error::Parse(format!("unknown record field: {other}")));
                }
            }
        }
        let perm = perm.ok_or_else(|| Error::Parse("missing perm line".into()))?;
        if let Some(n) = atoms {
            if n != perm.len() {
                return Err(Error::Parse(format!(
                    "atoms line says {n} but permutation has {} entries",
                    perm.len()
                )));
            }
        }
        let f_values = f_values.ok_or_else(|| Error::Parse("missing f line".into()))?;
        match weights {
            Some(w) => Self::new(perm, w, f_values),
            None => Self::uniform(perm, f_values),
        }
    }
}

fn parse_rationals(fields: &[&str]) -> Result<Vec<Rational>> {
    fields
        .iter()
        .map(|s| {
            s.parse::<Rational>()
                .map_err(|e| Error::Parse(format!("bad fraction {s}: {e}")))
        })
        .collect()
}

/// First time the atom's deficit goes strictly negative, through the
/// given horizon.
pub fn first_failure_exact<S: Scalar>(
    sys: &FiniteSystem<S>,
    atom: usize,
    horizon: u64,
) -> Result<FirstFailure> {
    if !sys.check_point(&atom) {
        return Err(Error::DomainMismatch);
    }
    if horizon == 0 {
        return Ok(FirstFailure::BeyondHorizon);
    }
    Ok(deficit_trace(sys, &atom, &sys.observable(), horizon)?
        .report()
        .first_failure)
}

/// Atoms heavy through the horizon, by brute force; horizon zero returns
/// every atom.
pub fn heavy_set_exact<S: Scalar>(sys: &FiniteSystem<S>, horizon: u64) -> Result<Vec<usize>> {
    let obs = sys.observable();
    (0..sys.atoms())
        .filter_map(|atom| match heavy_through(sys, &atom, &obs, horizon) {
            Ok(true) => Some(Ok(atom)),
            Ok(false) => None,
            Err(e) => Some(Err(e)),
        })
        .collect()
}

/// Atoms whose deficits are nonnegative at every time in `n1..=n2`.
/// Windows of either sign are accepted.
pub fn window_set_exact<S: Scalar>(
    sys: &FiniteSystem<S>,
    n1: i64,
    n2: i64,
) -> Result<Vec<usize>> {
    if n1 > n2 {
        return Err(Error::InvalidWindow { n1, n2 });
    }
    let obs = sys.observable();
    let lo = n1.min(0);
    let hi = n2.max(0);
    let mut out = Vec::new();
    for atom in 0..sys.atoms() {
        let trace = two_sided_trace(sys, &atom, &obs, lo, hi)?;
        let ok = (n1..=n2).all(|i| !trace.deficit(i).is_negative());
        if ok {
            out.push(atom);
        }
    }
    Ok(out)
}

/// One stage of the peeling: the set of uncovered atoms sharing the
/// maximal remaining failure time, together with its iterates.
#[derive(Clone, Debug)]
pub struct TowerRow<S> {
    pub base: Vec<usize>,
    pub height: u64,
    /// The iterates `T^i(base)` for `i < height`, in scan order; a
    /// multiset, since rows may fold over themselves.
    pub row_atoms: Vec<usize>,
    /// Weighted sum of the height-step partial sums over the base;
    /// strictly negative by construction.
    pub row_sum: S,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CollisionKind {
    /// The row stepped onto an atom some row (possibly itself) already
    /// claimed.
    AlreadyCovered,
    /// The row stepped onto an atom of the heavy set.
    HeavySetOverlap,
}

#[derive(Clone, Debug)]
pub struct Collision {
    pub row: usize,
    pub step: u64,
    pub atom: usize,
    pub kind: CollisionKind,
}

/// The full peeling outcome with its diagnostics.
#[derive(Clone, Debug)]
pub struct TowerPartition<S> {
    pub rows: Vec<TowerRow<S>>,
    pub collisions: Vec<Collision>,
    /// Atoms claimed by some row, ascending.
    pub covered: Vec<usize>,
    /// The heavy set at the same horizon, ascending.
    pub heavy: Vec<usize>,
}

impl<S> TowerPartition<S> {
    pub fn rows_disjoint(&self) -> bool {
        !self
            .collisions
            .iter()
            .any(|c| c.kind == CollisionKind::AlreadyCovered)
    }
}

/// Peel rows off the non-heavy part of the system: repeatedly take the
/// maximal remaining failure time `h <= horizon`, use every uncovered
/// atom failing exactly at `h` as a base, and claim the base's first `h`
/// iterates as a row. Heights strictly decrease, so the process
/// terminates; collisions with previous rows or with the heavy set are
/// recorded rather than forbidden.
pub fn greedy_tower_partition<S: Scalar>(
    sys: &FiniteSystem<S>,
    horizon: u64,
) -> Result<TowerPartition<S>> {
    if horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    let n = sys.atoms();
    let obs = sys.observable();
    let failures: Vec<FirstFailure> = (0..n)
        .map(|atom| first_failure_exact(sys, atom, horizon))
        .collect::<Result<_>>()?;
    let heavy: Vec<usize> = (0..n)
        .filter(|&a| failures[a].is_beyond_horizon())
        .collect();
    let is_heavy: Vec<bool> = (0..n).map(|a| failures[a].is_beyond_horizon()).collect();

    let mut covered = vec![false; n];
    let mut rows = Vec::new();
    let mut collisions = Vec::new();
    let mut previous_height: Option<u64> = None;

    loop {
        let stage_height = (0..n)
            .filter(|&a| !covered[a])
            .filter_map(|a| match failures[a] {
                FirstFailure::At(h) => Some(h),
                FirstFailure::BeyondHorizon => None,
            })
            .max();
        let Some(height) = stage_height else {
            break;
        };
        if let Some(prev) = previous_height {
            assert!(
                height < prev,
                "peeling heights must strictly decrease ({height} after {prev})"
            );
        }
        previous_height = Some(height);

        let base: Vec<usize> = (0..n)
            .filter(|&a| !covered[a] && failures[a] == FirstFailure::At(height))
            .collect();

        let mut row_sum = S::zero();
        for &b in &base {
            let trace = deficit_trace(sys, &b, &obs, height)?;
            let partial = trace.deficit(height as i64);
            assert!(
                partial.is_negative(),
                "base atom {b} should fail at its own failure time"
            );
            row_sum = row_sum + sys.weight(b).clone() * partial;
        }
        assert!(row_sum.is_negative(), "row sums are strictly negative");

        let row_index = rows.len();
        let mut row_atoms = Vec::with_capacity(base.len() * height as usize);
        let mut level = base.clone();
        for step in 0..height {
            for &atom in &level {
                if covered[atom] {
                    collisions.push(Collision {
                        row: row_index,
                        step,
                        atom,
                        kind: CollisionKind::AlreadyCovered,
                    });
                }
                if is_heavy[atom] {
                    collisions.push(Collision {
                        row: row_index,
                        step,
                        atom,
                        kind: CollisionKind::HeavySetOverlap,
                    });
                }
                covered[atom] = true;
                row_atoms.push(atom);
            }
            for atom in level.iter_mut() {
                *atom = sys.image(*atom);
            }
        }

        rows.push(TowerRow {
            base,
            height,
            row_atoms,
            row_sum,
        });
    }

    let covered: Vec<usize> = (0..n).filter(|&a| covered[a]).collect();
    Ok(TowerPartition {
        rows,
        collisions,
        covered,
        heavy,
    })
}

/// The certified facts behind "the heavy set has positive measure": the
/// heavy set is nonempty, every peeled row integrates strictly below
/// zero, and the rows can never simultaneously be pairwise disjoint and
/// cover the whole space (a disjoint cover of negative rows would force
/// the total integral below zero).
#[derive(Clone, Debug)]
pub struct HeavyExistenceCertificate<S> {
    pub horizon: u64,
    pub heavy_set: Vec<usize>,
    pub partition: TowerPartition<S>,
    pub rows_all_negative: bool,
    pub rows_disjoint: bool,
    pub rows_cover_space: bool,
    pub holds: bool,
}

pub fn heavy_existence_certificate<S: Scalar>(
    sys: &FiniteSystem<S>,
    horizon: u64,
) -> Result<HeavyExistenceCertificate<S>> {
    let heavy_set = heavy_set_exact(sys, horizon)?;
    let partition = greedy_tower_partition(sys, horizon)?;
    let rows_all_negative = partition.rows.iter().all(|r| r.row_sum.is_negative());
    let rows_disjoint = partition.rows_disjoint();
    let rows_cover_space = partition.covered.len() == sys.atoms();
    let holds = !heavy_set.is_empty() && rows_all_negative && !(rows_disjoint && rows_cover_space);
    Ok(HeavyExistenceCertificate {
        horizon,
        heavy_set,
        partition,
        rows_all_negative,
        rows_disjoint,
        rows_cover_space,
        holds,
    })
}

/// Uniformly random permutation with integer observable values in
/// `[-5, 5]` conditioned on zero sum, under uniform weights.
pub fn random_finite_system<S: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    atoms: usize,
) -> FiniteSystem<S> {
    let mut perm: Vec<usize> = (0..atoms).collect();
    perm.shuffle(rng);
    let values = random_zero_sum(rng, atoms);
    FiniteSystem::uniform(perm, values.into_iter().map(S::from_int).collect())
        .expect("generated systems are valid")
}

/// Random single cycle (the finite stand-in for an ergodic system) with
/// a random zero-sum integer observable.
pub fn random_cycle_system<S: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    atoms: usize,
) -> FiniteSystem<S> {
    let mut order: Vec<usize> = (0..atoms).collect();
    order.shuffle(rng);
    let mut perm = vec![0usize; atoms];
    for i in 0..atoms {
        perm[order[i]] = order[(i + 1) % atoms];
    }
    let values = random_zero_sum(rng, atoms);
    FiniteSystem::uniform(perm, values.into_iter().map(S::from_int).collect())
        .expect("generated systems are valid")
}

fn random_zero_sum<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<i64> {
    loop {
        let values: Vec<i64> = (0..n).map(|_| rng.random_range(-5..=5)).collect();
        if values.iter().sum::<i64>() == 0 {
            return values;
        }
    }
}

/// Two disjoint cycles carrying the centered indicator of the first one:
/// `f = 1 - mu(A)` on the first cycle and `-mu(A)` off it. The invariant
/// split makes every two-sided window starting weakly negative on one
/// side empty.
pub fn two_cycle_indicator_system<S: Scalar>(
    first: usize,
    second: usize,
) -> Result<FiniteSystem<S>> {
    if first == 0 || second == 0 {
        return Err(Error::InvalidSystem("both cycles need at least one atom".into()));
    }
    let n = first + second;
    let mut perm = Vec::with_capacity(n);
    for i in 0..first {
        perm.push((i + 1) % first);
    }
    for i in 0..second {
        perm.push(first + (i + 1) % second);
    }
    let mu_a = S::from_fraction(first as i64, n as i64);
    let mut f_values = Vec::with_capacity(n);
    for i in 0..n {
        if i < first {
            f_values.push(S::one() - &mu_a);
        } else {
            f_values.push(S::zero() - &mu_a);
        }
    }
    FiniteSystem::uniform(perm, f_values)
}
