use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("step budget must be at least 1")]
    ZeroSteps,
    #[error("system has no inverse step; negative times are undefined for it")]
    NotInvertible,
    #[error("invalid window bounds {n1}..{n2}")]
    InvalidWindow { n1: i64, n2: i64 },
    #[error("point lies outside the system's domain")]
    DomainMismatch,
    #[error("candidate list is empty")]
    NoCandidates,
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("invalid observable: {0}")]
    InvalidObservable(String),
    #[error("exact arithmetic required: {0}")]
    ExactnessRequired(&'static str),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("continued fraction is not in even-length normal form")]
    NotNormalized,
    #[error("parse error: {0}")]
    Parse(String),
}
