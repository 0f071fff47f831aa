//! Error taxonomy shared by every module in the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A tail is exactly zero from some point on; the hazard is undefined
    /// there. Carries the last representable hazard value.
    #[error("hazard saturated beyond support (last representable value {last_hazard})")]
    HazardSaturated { last_hazard: f64 },

    /// An inverse was requested for a function that is not strictly
    /// increasing.
    #[error("not invertible: {0}")]
    NotInvertible(String),

    /// A requested value lies outside the attainable range.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// A level or recursion left the representable/tabulated range.
    /// Carries the index of the last element that was still constructed.
    #[error("range exhausted after {constructed} element(s): {reason}")]
    RangeExhausted { constructed: usize, reason: String },

    /// The input function does not tend to infinity (zero final slope), so
    /// it cannot serve as a scale function.
    #[error("not a scale function: {0}")]
    NotAScaleFunction(String),

    /// Too few exceedances to say anything about the tail.
    #[error("insufficient tail data: {0}")]
    InsufficientTailData(String),

    /// A hazard estimate would divide by zero or is otherwise degenerate.
    #[error("degenerate hazard: {0}")]
    DegenerateHazard(String),

    /// A rule's hypothesis failed its gate. Carries a witness when one was
    /// found, e.g. a pair (a, b) violating subadditivity.
    #[error("hypothesis failed: {reason}")]
    HypothesisFailed {
        reason: String,
        witness: Option<(f64, f64)>,
    },

    /// Malformed textual input (CSV or JSON); carries a 1-based line number
    /// when it refers to a line-oriented file.
    #[error("parse error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
