//! Crate-wide error type.

use std::fmt;
use std::path::PathBuf;

/// Errors produced by the estimation and simulation routines.
#[derive(Debug)]
pub enum Error {
    /// A model parameter violates its domain (e.g. `s` outside `(0, 2]`).
    InvalidModel(String),
    /// A configuration value is malformed or inconsistent.
    InvalidConfig(String),
    /// The eval-point formula is infeasible for the requested sample size.
    EvalPoints(String),
    /// The bandwidth base `log n/2 - c log log n` is nonpositive.
    BandwidthInfeasible {
        n: usize,
        s: f64,
        beta_bar: f64,
        detail: String,
    },
    /// Quadrature refinement did not reach the requested tolerance.
    QuadratureNonConvergence(String),
    /// An intermediate magnitude would exceed the floating-point range.
    Overflow(String),
    /// A frequency-domain tail is not negligible at the configured cutoff.
    TailNotNegligible(String),
    /// File I/O failure, with the offending path.
    Io { path: PathBuf, source: std::io::Error },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidModel(msg) => write!(f, "invalid model: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::EvalPoints(msg) => write!(f, "evaluation points: {msg}"),
            Error::BandwidthInfeasible { n, s, beta_bar, detail } => write!(
                f,
                "bandwidth infeasible at n = {n}, s = {s}, beta_bar = {beta_bar}: {detail}"
            ),
            Error::QuadratureNonConvergence(msg) => {
                write!(f, "quadrature did not converge: {msg}")
            }
            Error::Overflow(msg) => write!(f, "magnitude overflow: {msg}"),
            Error::TailNotNegligible(msg) => write!(f, "tail not negligible: {msg}"),
            Error::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EvalPoints(_)
                | Error::BandwidthInfeasible { .. }
                | Error::QuadratureNonConvergence(_)
                | Error::Overflow(_)
                | Error::TailNotNegligible(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
