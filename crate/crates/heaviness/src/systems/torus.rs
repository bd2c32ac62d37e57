//! The k-torus skew product whose last coordinate tracks a polynomial
//! modulo one.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::systems::circle::CirclePoint;
use crate::systems::System;

/// A point of the k-torus, every coordinate in `[0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusPoint<S> {
    coords: Vec<CirclePoint<S>>,
}

impl<S: Scalar> TorusPoint<S> {
    pub fn new(coords: Vec<CirclePoint<S>>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidSystem("torus dimension must be at least 1".into()));
        }
        Ok(TorusPoint { coords })
    }

    pub fn from_fractions(fractions: &[(i64, i64)]) -> Result<Self> {
        Self::new(
            fractions
                .iter()
                .map(|&(n, d)| CirclePoint::from_fraction(n, d))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[CirclePoint<S>] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> &CirclePoint<S> {
        &self.coords[i]
    }

    /// The last coordinate, the one that tracks the polynomial.
    pub fn last(&self) -> &CirclePoint<S> {
        self.coords.last().expect("torus points are nonempty")
    }
}

impl<S: fmt::Display> fmt::Display for TorusPoint<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// The triangular map `(x1, ..., xk) -> (x1 + angle, x2 + x1, ..., xk + x_{k-1})`,
/// every coordinate mod 1. Right-hand sides use the incoming coordinates.
#[derive(Clone, Debug)]
pub struct SkewProduct<S> {
    angle: CirclePoint<S>,
    dim: usize,
}

impl<S: Scalar> SkewProduct<S> {
    pub fn angle(&self) -> &CirclePoint<S> {
        &self.angle
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

pub fn skew_product_system<S: Scalar>(angle: CirclePoint<S>, dim: usize) -> Result<SkewProduct<S>> {
    if dim == 0 {
        return Err(Error::InvalidSystem("skew product dimension must be at least 1".into()));
    }
    Ok(SkewProduct { angle, dim })
}

impl<S: Scalar> System for SkewProduct<S> {
    type Point = TorusPoint<S>;

    fn step(&self, point: &Self::Point) -> Self::Point {
        let old = &point.coords;
        let mut next = Vec::with_capacity(old.len());
        next.push(old[0].add(&self.angle));
        for i in 1..old.len() {
            next.push(old[i].add(&old[i - 1]));
        }
        TorusPoint { coords: next }
    }

    fn back_step(&self, point: &Self::Point) -> Option<Self::Point> {
        // Recover coordinates from the top: the first one fixes the rest.
        let new = &point.coords;
        let mut old = Vec::with_capacity(new.len());
        old.push(new[0].sub(&self.angle));
        for i in 1..new.len() {
            let prev: &CirclePoint<S> = &old[i - 1];
            old.push(new[i].sub(prev));
        }
        Some(TorusPoint { coords: old })
    }

    fn invertible(&self) -> bool {
        true
    }

    fn check_point(&self, point: &Self::Point) -> bool {
        point.dim() == self.dim
    }
}

fn factorial(k: usize) -> Result<i64> {
    if k > 20 {
        return Err(Error::OutOfRange(format!("dimension {k} too large (factorial overflow)")));
    }
    Ok((1..=k as i64).product())
}

/// The skew product whose orbit from [`coeffs_to_point`] tracks the
/// polynomial `angle * x^k + a_{k-1} x^{k-1} + ... + a_0` mod 1 in its
/// last coordinate. Its rotation amount is `k! * angle mod 1`: iterating
/// the triangular map adds the next finite difference to each coordinate,
/// and the k-th difference of the polynomial is the constant `k! * angle`.
pub fn polynomial_skew_system<S: Scalar>(angle: &CirclePoint<S>, dim: usize) -> Result<SkewProduct<S>> {
    let rotation = angle.scale(factorial(dim)?);
    skew_product_system(rotation, dim)
}

/// Coefficients of a polynomial, ascending powers.
type Poly<S> = Vec<S>;

fn poly_shift_diff<S: Scalar>(p: &Poly<S>) -> Poly<S> {
    // q(x) = p(x + 1) - p(x); degree drops by one.
    let deg = p.len() - 1;
    let mut shifted = vec![S::zero(); p.len()];
    for (m, c) in p.iter().enumerate() {
        // (x + 1)^m expands with binomial coefficients.
        let mut binom = 1i64;
        for j in 0..=m {
            shifted[j] = shifted[j].clone() + c.clone() * S::from_int(binom);
            binom = binom * (m as i64 - j as i64) / (j as i64 + 1);
        }
    }
    (0..deg)
        .map(|j| shifted[j].clone() - &p[j])
        .collect()
}

/// Initial torus point for the polynomial `p(x) = angle * x^k + a_{k-1} x^{k-1} + ... + a_0`
/// with `coeffs = [a_0, ..., a_{k-1}]`: the chain `q_k = p`,
/// `q_{i-1}(x) = q_i(x+1) - q_i(x)` evaluated at zero, reduced mod 1.
/// Iterating [`polynomial_skew_system`] from this point reproduces
/// `p(n) mod 1` in the last coordinate.
pub fn coeffs_to_point<S: Scalar>(
    angle: &CirclePoint<S>,
    coeffs: &[CirclePoint<S>],
) -> Result<TorusPoint<S>> {
    let k = coeffs.len();
    if k == 0 {
        return Err(Error::InvalidSystem("need at least one coefficient".into()));
    }
    factorial(k)?;
    let mut poly: Poly<S> = coeffs.iter().map(|c| c.value().clone()).collect();
    poly.push(angle.value().clone());

    let mut constants = vec![CirclePoint::new(poly[0].clone())]; // q_k(0)
    let mut q = poly;
    for _ in 1..k {
        q = poly_shift_diff(&q);
        constants.push(CirclePoint::new(q[0].clone()));
    }
    constants.reverse(); // (q_1(0), ..., q_k(0))
    TorusPoint::new(constants)
}

/// Last coordinates of the first `len` iterates of `start` (the start
/// point itself is iterate zero).
pub fn point_to_sequence<S: Scalar>(
    system: &SkewProduct<S>,
    start: &TorusPoint<S>,
    len: u64,
) -> Result<Vec<CirclePoint<S>>> {
    if !system.check_point(start) {
        return Err(Error::DomainMismatch);
    }
    let mut out = Vec::with_capacity(len as usize);
    let mut p = start.clone();
    for _ in 0..len {
        out.push(p.last().clone());
        p = system.step(&p);
    }
    Ok(out)
}

/// Direct evaluation of `angle * n^k + a_{k-1} n^{k-1} + ... + a_0` mod 1.
/// Independent of the skew-product route; used to cross-check it.
pub fn polynomial_value_mod1<S: Scalar>(
    angle: &CirclePoint<S>,
    coeffs: &[CirclePoint<S>],
    n: i64,
) -> CirclePoint<S> {
    let x = S::from_int(n);
    let mut acc = angle.value().clone();
    for a in coeffs.iter().rev() {
        acc = acc * &x + a.value();
    }
    CirclePoint::new(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Rational64, Scalar};

    type P = CirclePoint<Rational64>;

    fn frac(n: i64, d: i64) -> P {
        P::from_fraction(n, d)
    }

    #[test]
    fn one_dimensional_skew_is_the_rotation() {
        let sys = skew_product_system(frac(1, 3), 1).unwrap();
        let x = TorusPoint::new(vec![P::zero()]).unwrap();
        let y = sys.step(&x);
        assert_eq!(y.coords(), &[frac(1, 3)]);
    }

    #[test]
    fn second_coordinate_accumulates_the_first() {
        let sys = skew_product_system(frac(1, 4), 2).unwrap();
        let mut p = TorusPoint::new(vec![P::zero(), P::zero()]).unwrap();
        let mut seconds = vec![p.last().clone()];
        for _ in 0..4 {
            p = sys.step(&p);
            seconds.push(p.last().clone());
        }
        assert_eq!(
            seconds,
            vec![P::zero(), P::zero(), frac(1, 4), frac(3, 4), frac(1, 2)]
        );
    }

    #[test]
    fn inverse_composes_to_identity() {
        let sys = skew_product_system(frac(2, 7), 3).unwrap();
        let p = TorusPoint::from_fractions(&[(1, 3), (4, 5), (6, 11)]).unwrap();
        let q = sys.back_step(&sys.step(&p)).unwrap();
        assert_eq!(p, q);
        let r = sys.step(&sys.back_step(&p).unwrap());
        assert_eq!(p, r);
    }

    #[test]
    fn degree_one_point_is_the_constant_coefficient() {
        // p(x) = angle*x + a0 orbits as the plain rotation from a0.
        let alpha = frac(1, 3);
        let a0 = frac(2, 5);
        let start = coeffs_to_point(&alpha, &[a0.clone()]).unwrap();
        assert_eq!(start.coords(), &[a0.clone()]);
        let sys = polynomial_skew_system(&alpha, 1).unwrap();
        let seq = point_to_sequence(&sys, &start, 4).unwrap();
        assert_eq!(
            seq,
            vec![
                a0.clone(),
                a0.add(&alpha),
                a0.add(&alpha).add(&alpha),
                a0.add(&alpha).add(&alpha).add(&alpha)
            ]
        );
    }

    #[test]
    fn half_n_squared_alternates() {
        // p(x) = x^2/2 with zero lower coefficients: p(n) mod 1 alternates 0, 1/2.
        let alpha = frac(1, 2);
        let coeffs = [P::zero(), P::zero()];
        let start = coeffs_to_point(&alpha, &coeffs).unwrap();
        let sys = polynomial_skew_system(&alpha, 2).unwrap();
        let seq = point_to_sequence(&sys, &start, 5).unwrap();
        assert_eq!(
            seq,
            vec![P::zero(), frac(1, 2), P::zero(), frac(1, 2), P::zero()]
        );
    }

    #[test]
    fn skew_sequence_matches_direct_evaluation() {
        // Cubic with mixed coefficients, checked against Horner evaluation.
        let alpha = frac(3, 7);
        let coeffs = [frac(1, 5), frac(2, 3), frac(4, 9)];
        let start = coeffs_to_point(&alpha, &coeffs).unwrap();
        let sys = polynomial_skew_system(&alpha, 3).unwrap();
        let seq = point_to_sequence(&sys, &start, 30).unwrap();
        for (n, got) in seq.iter().enumerate() {
            let want = polynomial_value_mod1(&alpha, &coeffs, n as i64);
            assert_eq!(got, &want, "mismatch at n={n}");
        }
    }

    #[test]
    fn bijective_on_rational_grids() {
        // Rational-angle maps permute the denominator-q grid.
        for q in [2i64, 3, 5, 8, 12, 16] {
            let sys = skew_product_system::<Rational64>(frac(1, q), 2).unwrap();
            let mut seen = std::collections::HashSet::new();
            for i in 0..q {
                for j in 0..q {
                    let p = TorusPoint::from_fractions(&[(i, q), (j, q)]).unwrap();
                    let img = sys.step(&p);
                    let key = (
                        (img.coord(0).value() * Rational64::from_int(q)).to_integer(),
                        (img.coord(1).value() * Rational64::from_int(q)).to_integer(),
                    );
                    assert!(seen.insert(key), "collision on grid q={q}");
                }
            }
            assert_eq!(seen.len(), (q * q) as usize);
        }
    }
}
