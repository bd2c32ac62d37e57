//! The concrete dynamical systems: circle rotations, times-m maps, the
//! torus skew product behind polynomial sequences, the Morse shift, and
//! the [`System`] abstraction they all share.

pub mod circle;
pub mod morse;
pub mod torus;

/// A transformation that can be stepped forward, and backward when it is
/// invertible. Stepping is pure; systems are immutable descriptors.
pub trait System {
    type Point: Clone;

    fn step(&self, point: &Self::Point) -> Self::Point;

    /// One step of the inverse map, or `None` when the system is not
    /// invertible.
    fn back_step(&self, point: &Self::Point) -> Option<Self::Point>;

    fn invertible(&self) -> bool;

    /// Whether the point belongs to the system's domain.
    fn check_point(&self, _point: &Self::Point) -> bool {
        true
    }
}
