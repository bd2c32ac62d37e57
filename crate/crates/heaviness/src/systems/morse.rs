//! The Morse sequence (fixed point of 0 -> 01, 1 -> 10), presented as a
//! shift system over offsets into the sequence, plus a fast scanner for
//! the heaviness of its "11" blocks.

use std::sync::{Arc, RwLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::observable::Observable;
use crate::scalar::Scalar;
use crate::systems::System;

/// Prefix of the Morse sequence as 0/1 bytes. Doubling a power-of-two
/// prefix appends its bitwise complement, which is exactly the
/// substitution fixed point.
pub fn morse_prefix(len: usize) -> Vec<u8> {
    let mut bits = Vec::with_capacity(len.next_power_of_two().max(2));
    bits.push(0u8);
    while bits.len() < len {
        for i in 0..bits.len() {
            bits.push(1 - bits[i]);
        }
    }
    bits.truncate(len);
    bits
}

pub fn morse_prefix_string(len: usize) -> String {
    morse_prefix(len)
        .into_iter()
        .map(|b| if b == 0 { '0' } else { '1' })
        .collect()
}

/// Bit `n` of the Morse sequence via the parity of the binary digit sum
/// of `n`. Independent of the substitution generator; used as its oracle.
pub fn morse_bit_by_parity(n: u64) -> u8 {
    (n.count_ones() & 1) as u8
}

/// Offset into the Morse sequence; the shift moves it right.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MorsePoint {
    pub offset: usize,
}

impl MorsePoint {
    pub fn new(offset: usize) -> Self {
        MorsePoint { offset }
    }
}

impl std::fmt::Display for MorsePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.offset.fmt(f)
    }
}

#[derive(Clone, Debug)]
struct SharedBits(Arc<RwLock<Vec<u8>>>);

impl SharedBits {
    fn with_len(len: usize) -> Self {
        SharedBits(Arc::new(RwLock::new(morse_prefix(
            len.next_power_of_two().max(2),
        ))))
    }

    fn bit(&self, index: usize) -> u8 {
        {
            let bits = self.0.read().expect("morse buffer lock");
            if let Some(&b) = bits.get(index) {
                return b;
            }
        }
        let mut bits = self.0.write().expect("morse buffer lock");
        // The buffer length stays a power of two, so appending the
        // complement of the whole buffer extends the fixed point.
        while bits.len() <= index {
            for i in 0..bits.len() {
                let b = 1 - bits[i];
                bits.push(b);
            }
        }
        bits[index]
    }
}

/// The one-sided shift on the Morse sequence. Points are offsets; the
/// backing prefix grows transparently as larger offsets are read.
#[derive(Clone, Debug)]
pub struct MorseShift {
    bits: SharedBits,
}

impl MorseShift {
    pub fn new() -> Self {
        Self::with_len(64)
    }

    /// Pre-generate at least `len` symbols up front.
    pub fn with_len(len: usize) -> Self {
        MorseShift {
            bits: SharedBits::with_len(len),
        }
    }

    pub fn bit(&self, index: usize) -> u8 {
        self.bits.bit(index)
    }

    /// The observable "current symbol is 1", of mean one half.
    pub fn bit_observable(&self) -> MorseBit {
        MorseBit {
            bits: self.bits.clone(),
        }
    }
}

impl Default for MorseShift {
    fn default() -> Self {
        Self::new()
    }
}

pub fn morse_shift_system() -> MorseShift {
    MorseShift::new()
}

impl System for MorseShift {
    type Point = MorsePoint;

    fn step(&self, point: &Self::Point) -> Self::Point {
        MorsePoint::new(point.offset + 1)
    }

    fn back_step(&self, _point: &Self::Point) -> Option<Self::Point> {
        None
    }

    fn invertible(&self) -> bool {
        false
    }
}

/// Indicator of "the symbol at the current offset is 1"; its mean under
/// the shift-invariant measure is 1/2.
#[derive(Clone, Debug)]
pub struct MorseBit {
    bits: SharedBits,
}

impl<S: Scalar> Observable<S> for MorseBit {
    type Point = MorsePoint;

    fn eval(&self, point: &Self::Point) -> S {
        S::from_int(i64::from(self.bits.bit(point.offset)))
    }

    fn mean(&self) -> S {
        S::from_fraction(1, 2)
    }
}

/// Outcome of scanning every "11" block start for deficit dominance.
#[derive(Clone, Debug)]
pub struct MorseBlockReport {
    /// Starts `p < max_start` with symbols "11" at `(p, p+1)`.
    pub positions_tested: usize,
    /// Positions whose deficit dipped below zero, with the first bad time.
    pub violations: Vec<(usize, u64)>,
    /// Minimum over tested positions of the number of times `n >= 1`
    /// with deficit exactly zero.
    pub min_zero_returns: usize,
    pub horizon: usize,
}

impl MorseBlockReport {
    pub fn all_heavy(&self) -> bool {
        self.violations.is_empty()
    }
}

/// For every `p < max_start` with bits "11" at `(p, p+1)`, walk the
/// running deficits `sum_{i<n} (bit_{p+i} - 1/2)` for `n <= horizon`,
/// recording sign violations and exact returns to zero. Deficits are
/// half-integers, tracked as doubled integers.
pub fn morse_block_heaviness(max_start: usize, horizon: usize) -> Result<MorseBlockReport> {
    if horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    let bits = morse_prefix(max_start + horizon);
    let starts: Vec<usize> = (0..max_start.saturating_sub(1))
        .filter(|&p| bits[p] == 1 && bits[p + 1] == 1)
        .collect();

    let per_start: Vec<(Option<u64>, usize)> = starts
        .par_iter()
        .map(|&p| {
            let mut doubled: i64 = 0;
            let mut zeros = 0usize;
            let mut violation = None;
            for i in 0..horizon {
                doubled += 2 * i64::from(bits[p + i]) - 1;
                if doubled < 0 {
                    violation = Some(i as u64 + 1);
                    break;
                }
                if doubled == 0 {
                    zeros += 1;
                }
            }
            (violation, zeros)
        })
        .collect();

    let mut violations = Vec::new();
    let mut min_zero_returns = usize::MAX;
    for (&p, (violation, zeros)) in starts.iter().zip(&per_start) {
        if let Some(n) = violation {
            violations.push((p, *n));
        } else {
            min_zero_returns = min_zero_returns.min(*zeros);
        }
    }
    if min_zero_returns == usize::MAX {
        min_zero_returns = 0;
    }
    Ok(MorseBlockReport {
        positions_tested: starts.len(),
        violations,
        min_zero_returns,
        horizon,
    })
}
