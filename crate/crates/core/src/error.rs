use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors surfaced by spec construction, classification and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The adaptive scheme could not certify convergence or divergence of a
    /// reciprocal integral within tolerance.
    QuadratureNonConvergence { lo: f64, hi: f64 },
    /// A custom piece carries no certified zero locus, so the zero set
    /// cannot be computed.
    UnresolvedZero { piece: usize },
    /// The queried pair of points does not lie inside one monotone interval.
    OutsideDomain { x0: f64, x: f64 },
    /// A branch point has no declared branch selection.
    PhiMissing { x: f64 },
    /// A branch point has no declared upward probability.
    ThetaMissing { x: f64 },
    /// A stop point is not a zero of `f`.
    StopPointNotZero { x: f64 },
    /// A waiting point is not a zero of `f`.
    WaitPointNotZero { x: f64 },
    /// A waiting rate is not strictly positive.
    NonpositiveRate { x: f64, rate: f64 },
    /// A branch point was also declared as a stop point; the combination
    /// is rejected rather than resolved silently.
    BranchStopConflict { x: f64 },
    /// A measure component is not supported on the zero set of `f`.
    MeasureNotSupported { lo: f64, hi: f64 },
    /// A measure component is malformed (weights, ratio or mass).
    MeasureInvalid(String),
    /// The right-hand side failed validation.
    FunctionInvalid { rule: &'static str, witness: f64 },
    /// A path family handed to the closure check is not uniformly
    /// converging.
    NotConverged,
    /// Structurally malformed input (lengths, ordering, non-finite values).
    Malformed(String),
    /// A query argument is outside its precondition (for example `t < 0`).
    BadArgument(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::QuadratureNonConvergence { lo, hi } => {
                write!(f, "quadrature did not converge on [{lo}, {hi}]")
            }
            Error::UnresolvedZero { piece } => {
                write!(f, "custom piece {piece} has no certified zero locus")
            }
            Error::OutsideDomain { x0, x } => {
                write!(f, "{x0} and {x} do not lie in one monotone interval")
            }
            Error::PhiMissing { x } => {
                write!(f, "no branch selection declared at branch point {x}")
            }
            Error::ThetaMissing { x } => {
                write!(f, "no upward probability declared at branch point {x}")
            }
            Error::StopPointNotZero { x } => {
                write!(f, "stop point {x} is not a zero of f")
            }
            Error::WaitPointNotZero { x } => {
                write!(f, "waiting point {x} is not a zero of f")
            }
            Error::NonpositiveRate { x, rate } => {
                write!(f, "waiting point {x} has nonpositive rate {rate}")
            }
            Error::BranchStopConflict { x } => {
                write!(f, "point {x} is both a branch point and a stop point")
            }
            Error::MeasureNotSupported { lo, hi } => {
                write!(
                    f,
                    "measure component on [{lo}, {hi}] is not supported on the zero set"
                )
            }
            Error::MeasureInvalid(msg) => write!(f, "invalid measure: {msg}"),
            Error::NotConverged => {
                write!(f, "successive paths do not converge uniformly")
            }
            Error::FunctionInvalid { rule, witness } => {
                write!(f, "right-hand side invalid ({rule} at {witness})")
            }
            Error::Malformed(msg) => write!(f, "malformed input: {msg}"),
            Error::BadArgument(msg) => write!(f, "bad argument: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
