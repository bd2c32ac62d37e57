//! Points on the circle `[0, 1)` and the two basic circle maps: rotation
//! and multiplication by an integer.

use std::fmt;
use std::marker::PhantomData;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::systems::System;

/// A point of the circle, kept reduced into `[0, 1)`.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub struct CirclePoint<S>(S);

impl<S: Scalar> CirclePoint<S> {
    pub fn new(value: S) -> Self {
        CirclePoint(value.mod1())
    }

    pub fn zero() -> Self {
        CirclePoint(S::zero())
    }

    pub fn from_fraction(numer: i64, denom: i64) -> Self {
        Self::new(S::from_fraction(numer, denom))
    }

    pub fn value(&self) -> &S {
        &self.0
    }

    pub fn into_value(self) -> S {
        self.0
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.0.clone() + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(self.0.clone() - &other.0)
    }

    pub fn scale(&self, factor: i64) -> Self {
        Self::new(self.0.clone() * S::from_int(factor))
    }
}

impl<S: fmt::Display> fmt::Display for CirclePoint<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The rotation `x -> x + angle mod 1`.
#[derive(Clone, Debug)]
pub struct Rotation<S> {
    angle: CirclePoint<S>,
}

impl<S: Scalar> Rotation<S> {
    pub fn angle(&self) -> &CirclePoint<S> {
        &self.angle
    }
}

pub fn rotation_system<S: Scalar>(angle: CirclePoint<S>) -> Rotation<S> {
    Rotation { angle }
}

impl<S: Scalar> System for Rotation<S> {
    type Point = CirclePoint<S>;

    fn step(&self, point: &Self::Point) -> Self::Point {
        point.add(&self.angle)
    }

    fn back_step(&self, point: &Self::Point) -> Option<Self::Point> {
        Some(point.sub(&self.angle))
    }

    fn invertible(&self) -> bool {
        true
    }
}

/// The degree-m circle endomorphism `x -> m x mod 1`. Not invertible.
#[derive(Clone, Debug)]
pub struct TimesM<S> {
    multiplier: u32,
    _scalar: PhantomData<S>,
}

impl<S: Scalar> TimesM<S> {
    pub fn multiplier(&self) -> u32 {
        self.multiplier
    }
}

pub fn times_m_system<S: Scalar>(m: u32) -> Result<TimesM<S>> {
    if m < 2 {
        return Err(Error::InvalidSystem(format!(
            "multiplier must be at least 2, got {m}"
        )));
    }
    Ok(TimesM {
        multiplier: m,
        _scalar: PhantomData,
    })
}

impl<S: Scalar> System for TimesM<S> {
    type Point = CirclePoint<S>;

    fn step(&self, point: &Self::Point) -> Self::Point {
        point.scale(i64::from(self.multiplier))
    }

    fn back_step(&self, _point: &Self::Point) -> Option<Self::Point> {
        None
    }

    fn invertible(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational64;

    type P = CirclePoint<Rational64>;

    #[test]
    fn zero_rotation_is_the_identity() {
        let sys = rotation_system(P::zero());
        let x = P::from_fraction(3, 7);
        assert_eq!(sys.step(&x), x);
    }

    #[test]
    fn third_rotation_cycles_in_three() {
        let sys = rotation_system(P::from_fraction(1, 3));
        let mut x = P::zero();
        let mut orbit = vec![x.clone()];
        for _ in 0..3 {
            x = sys.step(&x);
            orbit.push(x.clone());
        }
        assert_eq!(
            orbit,
            vec![
                P::zero(),
                P::from_fraction(1, 3),
                P::from_fraction(2, 3),
                P::zero()
            ]
        );
    }

    #[test]
    fn rotation_inverse_subtracts() {
        let sys = rotation_system(P::from_fraction(1, 3));
        assert_eq!(sys.back_step(&P::zero()), Some(P::from_fraction(2, 3)));
    }

    #[test]
    fn times_m_examples() {
        let double = times_m_system::<Rational64>(2).unwrap();
        assert_eq!(double.step(&P::from_fraction(1, 3)), P::from_fraction(2, 3));
        let triple = times_m_system::<Rational64>(3).unwrap();
        assert_eq!(triple.step(&P::from_fraction(1, 3)), P::zero());

        let double_f = times_m_system::<f64>(2).unwrap();
        let y = double_f.step(&CirclePoint::new(0.3));
        assert!((y.value() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn times_m_rejects_small_multipliers() {
        assert!(times_m_system::<Rational64>(1).is_err());
        assert!(times_m_system::<Rational64>(0).is_err());
    }

    #[test]
    fn times_m_has_no_inverse() {
        let sys = times_m_system::<Rational64>(2).unwrap();
        assert!(!sys.invertible());
        assert_eq!(sys.back_step(&P::zero()), None);
    }
}
