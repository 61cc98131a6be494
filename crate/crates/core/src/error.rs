use crate::ifs::Violation;
use crate::inverse::simplex::LpError;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample is empty")]
    EmptySample,
    #[error("sample value {0} is outside the open interval (0,1)")]
    SampleOutOfRange(f64),
    #[error("duplicate sample value {0}")]
    DuplicateSample(f64),
    #[error("invalid grid function: {0}")]
    InvalidGrid(String),
    #[error("invalid IFS system: {}", format_violations(.0))]
    InvalidSystem(Vec<Violation>),
    #[error("system is not contractive (c = {0})")]
    NotContractive(f64),
    #[error(
        "fixed-point iteration did not converge after {iterations} iterations (bound {bound:e})"
    )]
    NoConvergence { iterations: usize, bound: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("constraint set is empty: 1 - sum(delta) = {0}")]
    EmptyConstraintSet(f64),
    #[error("distribution function is not invertible: {0}")]
    NotInvertible(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("linear program: {0}")]
    Lp(#[from] LpError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by the filesystem rather than by the input values.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Json(e) => e.is_io(),
            Error::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(_)),
            _ => false,
        }
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
