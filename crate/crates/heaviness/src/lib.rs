//! Heaviness: prefix-sum dominance of Birkhoff averages.
//!
//! A point of a measure-preserving system is *heavy through time N* for
//! an observable when none of its first N partial sums falls below the
//! matching multiple of the space average; it is *heavy* when that holds
//! for every N. This crate computes the deficit traces behind these
//! notions, decides heaviness exactly on rational data, and provides the
//! standard example systems: exact weighted permutations, circle
//! rotations and times-m maps, the torus skew product that generates
//! polynomial sequences, and the Morse substitution shift. For the bare
//! sequence x, 2x, 3x, ... it also carries the exact periodic decision
//! procedure and the continued-fraction divisibility test for targets
//! `[0, 1/k)`.
//!
//! The numeric core is generic over a [`Scalar`]: computations on
//! rational inputs stay exact end to end, floating-point runs carry an
//! explicit tolerance and are labeled numerical.

pub mod cf;
pub mod error;
pub mod finite;
pub mod multiples;
pub mod observable;
pub mod scalar;
pub mod search;
pub mod systems;
pub mod trace;

pub use cf::{
    cf_expand_normalized, characterization_rows, characterization_sweep, odd_index_divisible,
    ContinuedFraction, SweepReport, SweepRow,
};
pub use error::{Error, Result};
pub use finite::{
    first_failure_exact, greedy_tower_partition, heavy_existence_certificate, heavy_set_exact,
    random_cycle_system, random_finite_system, two_cycle_indicator_system, window_set_exact,
    Collision, CollisionKind, FiniteSystem, HeavyExistenceCertificate, TowerPartition, TowerRow,
};
pub use multiples::{
    heavy_multiples_exact, heavy_multiples_scan, multiples_deficits, MultiplesDecision,
    MultiplesScan, MultiplesVerdict, ScanMode,
};
pub use observable::{
    AtomTable, Constant, Indicator, IntervalUnion, LastCoordIndicator, Observable, StepFunction,
};
pub use scalar::{NumericMode, Rational, Rational64, Scalar};
pub use search::{find_heavy_candidate, two_sided_search, CandidateOutcome, TwoSidedWitness};
pub use systems::circle::{rotation_system, times_m_system, CirclePoint, Rotation, TimesM};
pub use systems::morse::{
    morse_bit_by_parity, morse_block_heaviness, morse_prefix, morse_prefix_string,
    morse_shift_system, MorseBit, MorseBlockReport, MorsePoint, MorseShift,
};
pub use systems::torus::{
    coeffs_to_point, point_to_sequence, polynomial_skew_system, polynomial_value_mod1,
    skew_product_system, SkewProduct, TorusPoint,
};
pub use systems::System;
pub use trace::{
    deficit_trace, heavy_through, heavy_window, two_sided_trace, DeficitTrace, FirstFailure,
    HeavinessReport,
};
