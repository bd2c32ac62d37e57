//! Textual specs for numbers, systems, observables, and points. Exact
//! inputs (fractions, decimals, integers) never pass through a float;
//! `sqrt(n)` marks a value as irrational and forces the float pipeline.

use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use num_bigint::BigInt;

use heaviness::{
    rotation_system, times_m_system, CirclePoint, Constant, Indicator, IntervalUnion, Observable,
    Rational, Rotation, Scalar, StepFunction, System, TimesM, TorusPoint,
};

/// A parsed numeric literal: exact rational or explicitly irrational.
#[derive(Clone, Debug)]
pub enum Num {
    Exact(Rational),
    Irrational(f64),
}

impl Num {
    pub fn parse(text: &str) -> Result<Num> {
        let t = text.trim();
        if let Some(inner) = t
            .strip_prefix("sqrt(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| t.strip_prefix("sqrt"))
        {
            let v: f64 = inner
                .parse()
                .with_context(|| format!("bad sqrt argument in {t:?}"))?;
            if v < 0.0 {
                bail!("sqrt of a negative number in {t:?}");
            }
            return Ok(Num::Irrational(v.sqrt()));
        }
        if let Some((int_part, frac_part)) = t.split_once('.') {
            let (sign, int_digits) = match int_part.strip_prefix('-') {
                Some(rest) => (-1, rest),
                None => (1, int_part),
            };
            let int_digits = if int_digits.is_empty() { "0" } else { int_digits };
            let frac_part = if frac_part.is_empty() { "0" } else { frac_part };
            let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
            let int: BigInt = int_digits
                .parse()
                .with_context(|| format!("bad decimal {t:?}"))?;
            let frac: BigInt = frac_part
                .parse()
                .with_context(|| format!("bad decimal {t:?}"))?;
            let numer = (int * &scale + frac) * BigInt::from(sign);
            return Ok(Num::Exact(Rational::new(numer, scale)));
        }
        let r = Rational::from_str(t).map_err(|e| anyhow!("bad value {t:?}: {e}"))?;
        Ok(Num::Exact(r))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Num::Exact(_))
    }

    pub fn to_scalar<S: Scalar>(&self) -> Result<S> {
        match self {
            Num::Exact(r) => {
                S::from_rational(r).ok_or_else(|| anyhow!("value {r} does not fit the scalar type"))
            }
            Num::Irrational(v) => {
                if S::EXACT {
                    bail!("irrational value in an exact computation; pass --approx or a fraction")
                }
                // Floats are dyadic rationals, so this round-trips exactly.
                let r = Rational::from_float(*v)
                    .ok_or_else(|| anyhow!("value {v} is not finite"))?;
                S::from_rational(&r).ok_or_else(|| anyhow!("value {v} does not fit the scalar"))
            }
        }
    }

    pub fn exact(&self) -> Result<&Rational> {
        match self {
            Num::Exact(r) => Ok(r),
            Num::Irrational(_) => bail!("this operation needs an exact rational input"),
        }
    }
}

/// Which dynamical system to run.
#[derive(Clone, Debug)]
pub enum SystemSpec {
    Rotation(Num),
    Times(u32),
    Skew { alpha: Num, dim: usize },
    Finite(PathBuf),
    Morse,
}

impl SystemSpec {
    pub fn parse(text: &str) -> Result<SystemSpec> {
        let t = text.trim();
        if t == "morse" {
            return Ok(SystemSpec::Morse);
        }
        let (kind, rest) = t
            .split_once(':')
            .ok_or_else(|| anyhow!("system spec {t:?} needs the form kind:params"))?;
        match kind {
            "rotation" => Ok(SystemSpec::Rotation(Num::parse(rest)?)),
            "times" => Ok(SystemSpec::Times(
                rest.parse().with_context(|| format!("bad multiplier {rest:?}"))?,
            )),
            "skew" => {
                let (alpha, dim) = rest
                    .split_once(',')
                    .ok_or_else(|| anyhow!("skew spec needs alpha,k"))?;
                Ok(SystemSpec::Skew {
                    alpha: Num::parse(alpha)?,
                    dim: dim.trim().parse().with_context(|| format!("bad dimension {dim:?}"))?,
                })
            }
            "finite" => Ok(SystemSpec::Finite(PathBuf::from(rest))),
            other => bail!("unknown system kind {other:?} (rotation, times, skew, finite, morse)"),
        }
    }

    /// Does this system force the float pipeline?
    pub fn needs_approx(&self) -> bool {
        match self {
            SystemSpec::Rotation(a) => !a.is_exact(),
            SystemSpec::Skew { alpha, .. } => !alpha.is_exact(),
            _ => false,
        }
    }

    pub fn label(&self) -> String {
        match self {
            SystemSpec::Rotation(_) => "rotation".into(),
            SystemSpec::Times(m) => format!("times:{m}"),
            SystemSpec::Skew { dim, .. } => format!("skew:k={dim}"),
            SystemSpec::Finite(path) => format!("finite:{}", path.display()),
            SystemSpec::Morse => "morse".into(),
        }
    }
}

/// Circle maps behind one `System` type so the dispatcher stays small.
pub enum CircleSystem<S> {
    Rotation(Rotation<S>),
    Times(TimesM<S>),
}

impl<S: Scalar> CircleSystem<S> {
    pub fn build(spec: &SystemSpec) -> Result<CircleSystem<S>> {
        match spec {
            SystemSpec::Rotation(alpha) => Ok(CircleSystem::Rotation(rotation_system(
                CirclePoint::new(alpha.to_scalar()?),
            ))),
            SystemSpec::Times(m) => Ok(CircleSystem::Times(times_m_system(*m)?)),
            _ => bail!("not a circle system"),
        }
    }
}

impl<S: Scalar> System for CircleSystem<S> {
    type Point = CirclePoint<S>;

    fn step(&self, point: &Self::Point) -> Self::Point {
        match self {
            CircleSystem::Rotation(sys) => sys.step(point),
            CircleSystem::Times(sys) => sys.step(point),
        }
    }

    fn back_step(&self, point: &Self::Point) -> Option<Self::Point> {
        match self {
            CircleSystem::Rotation(sys) => sys.back_step(point),
            CircleSystem::Times(sys) => sys.back_step(point),
        }
    }

    fn invertible(&self) -> bool {
        match self {
            CircleSystem::Rotation(sys) => sys.invertible(),
            CircleSystem::Times(sys) => sys.invertible(),
        }
    }
}

/// Circle observables behind one type.
pub enum CircleObs<S> {
    Indicator(Indicator<S>),
    Step(StepFunction<S>),
    Constant(Constant<S, CirclePoint<S>>),
}

impl<S: Scalar> Observable<S> for CircleObs<S> {
    type Point = CirclePoint<S>;

    fn eval(&self, point: &Self::Point) -> S {
        match self {
            CircleObs::Indicator(f) => f.eval(point),
            CircleObs::Step(f) => f.eval(point),
            CircleObs::Constant(f) => f.eval(point),
        }
    }

    fn mean(&self) -> S {
        match self {
            CircleObs::Indicator(f) => f.mean(),
            CircleObs::Step(f) => f.mean(),
            CircleObs::Constant(f) => f.mean(),
        }
    }
}

/// Does an observable spec mention an irrational value?
pub fn obs_needs_approx(spec: Option<&str>) -> bool {
    spec.is_some_and(|s| s.contains("sqrt"))
}

pub fn parse_interval_union<S: Scalar>(text: &str) -> Result<IntervalUnion<S>> {
    let mut intervals = Vec::new();
    for part in text.split(';') {
        let (a, b) = part
            .split_once(',')
            .ok_or_else(|| anyhow!("interval {part:?} needs the form a,b"))?;
        intervals.push((Num::parse(a)?.to_scalar()?, Num::parse(b)?.to_scalar()?));
    }
    Ok(IntervalUnion::new(intervals)?)
}

pub fn circle_obs<S: Scalar>(spec: Option<&str>) -> Result<CircleObs<S>> {
    let spec = spec.ok_or_else(|| {
        anyhow!("circle systems need --obs (indicator:a,b[;c,d...], step:b=v[,b=v...], constant:c)")
    })?;
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| anyhow!("observable spec {spec:?} needs the form kind:params"))?;
    match kind {
        "indicator" => Ok(CircleObs::Indicator(Indicator::new(parse_interval_union(
            rest,
        )?))),
        "step" => {
            let mut breakpoints = Vec::new();
            let mut values = Vec::new();
            for pair in rest.split(',') {
                let (b, v) = pair
                    .split_once('=')
                    .ok_or_else(|| anyhow!("step segment {pair:?} needs the form breakpoint=value"))?;
                breakpoints.push(Num::parse(b)?.to_scalar()?);
                values.push(Num::parse(v)?.to_scalar()?);
            }
            Ok(CircleObs::Step(StepFunction::new(breakpoints, values)?))
        }
        "constant" => Ok(CircleObs::Constant(Constant::new(
            Num::parse(rest)?.to_scalar()?,
        ))),
        other => bail!("unknown circle observable kind {other:?}"),
    }
}

pub fn circle_point<S: Scalar>(text: &str) -> Result<CirclePoint<S>> {
    Ok(CirclePoint::new(Num::parse(text)?.to_scalar()?))
}

pub fn torus_point<S: Scalar>(text: &str, dim: usize) -> Result<TorusPoint<S>> {
    let coords = text
        .split(',')
        .map(circle_point::<S>)
        .collect::<Result<Vec<_>>>()?;
    if coords.len() != dim {
        bail!("point {text:?} has {} coordinates, the system needs {dim}", coords.len());
    }
    Ok(TorusPoint::new(coords)?)
}
