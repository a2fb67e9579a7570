use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Only n = 1 and n = 2 are supported.
    UnsupportedDimension(usize),
    InvalidSpacing(f64),
    /// The lattice is too coarse for any node to have its axis neighbours in
    /// the closed ball.
    NoInteriorNode { spacing: f64 },
    InvalidTimeGrid(String),
    TooFewTimeNodes { needed: usize, found: usize },
    NotPositiveDefinite,
    EmptyDictionary,
    NonConvergence { sweeps: usize, last_update: f64 },
    NegativeDensity { node: usize, value: f64 },
    NonFinite(&'static str),
    GridMismatch(&'static str),
    OutOfRange(String),
    PointOutsideBall { norm: f64 },
    /// A declared property of the data failed its sampled verification.
    DataViolation {
        what: String,
        t: f64,
        point: Vec<f64>,
        observed: f64,
        bound: f64,
    },
    Precondition(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnsupportedDimension(n) => {
                write!(f, "complex dimension {n} is not supported (expected 1 or 2)")
            }
            Error::InvalidSpacing(h) => write!(f, "invalid grid spacing {h}"),
            Error::NoInteriorNode { spacing } => {
                write!(f, "grid spacing {spacing} leaves no interior node in the ball")
            }
            Error::InvalidTimeGrid(msg) => write!(f, "invalid time grid: {msg}"),
            Error::TooFewTimeNodes { needed, found } => {
                write!(f, "need at least {needed} time nodes, found {found}")
            }
            Error::NotPositiveDefinite => write!(f, "matrix is not positive definite"),
            Error::EmptyDictionary => write!(f, "dictionary has no usable matrix"),
            Error::NonConvergence {
                sweeps,
                last_update,
            } => write!(
                f,
                "nonlinear sweeps did not converge after {sweeps} sweeps (last update {last_update:e})"
            ),
            Error::NegativeDensity { node, value } => {
                write!(f, "density is negative ({value}) at node {node}")
            }
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::GridMismatch(what) => write!(f, "grid mismatch: {what}"),
            Error::OutOfRange(msg) => write!(f, "out of range: {msg}"),
            Error::PointOutsideBall { norm } => {
                write!(f, "point with norm {norm} is outside the unit ball")
            }
            Error::DataViolation {
                what,
                t,
                point,
                observed,
                bound,
            } => write!(
                f,
                "{what}: observed {observed} exceeds {bound} at t = {t}, point {point:?}"
            ),
            Error::Precondition(msg) => write!(f, "precondition failed: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
