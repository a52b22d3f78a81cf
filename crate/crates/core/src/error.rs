//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// All failure modes surfaced by the library.
///
/// Every variant is a refusal, never a silently degraded answer: in
/// particular [`Error::AmbiguousReconstruction`] is returned whenever the
/// certified bound on the true product does not fit the modulus product,
/// instead of picking one of the congruent candidates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Matrix dimensions do not line up for the requested operation.
    ShapeMismatch(String),
    /// An input entry is NaN or infinite.
    NonFinite,
    /// Exponent of zero is undefined.
    ZeroArgument,
    /// Two moduli share a common factor.
    NotCoprime { a: u64, b: u64 },
    /// Asked for more moduli than the regime can supply.
    ModulusSupplyExhausted { requested: usize, available: usize },
    /// Modulus set must be non-empty and each modulus >= 2.
    InvalidModulus(u64),
    /// The modulus product is too small for the inner dimension.
    BudgetTooSmall,
    /// A residue entry lies outside the admissible range for its modulus.
    ResidueOutOfRange,
    /// A backend was invoked outside its exactness envelope.
    BackendPrecondition(String),
    /// The bound on the true product does not certify a unique candidate.
    AmbiguousReconstruction,
    /// Result exceeds the binary64 range.
    Overflow,
    /// No integer in the admissible range satisfies all congruences.
    NoCrtSolution,
    /// More than one integer in the range satisfies all congruences.
    NonUniqueCrtSolution,
    /// Slice width would be zero or negative for this inner dimension.
    SliceWidthUnusable { q: usize },
    /// Invalid parameter (word count, slice count, ...).
    InvalidParameter(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Error::NonFinite => write!(f, "input contains a non-finite entry"),
            Error::ZeroArgument => write!(f, "argument must be nonzero"),
            Error::NotCoprime { a, b } => write!(f, "moduli {a} and {b} are not coprime"),
            Error::ModulusSupplyExhausted {
                requested,
                available,
            } => write!(
                f,
                "requested {requested} moduli but only {available} are available"
            ),
            Error::InvalidModulus(m) => write!(f, "invalid modulus {m}"),
            Error::BudgetTooSmall => {
                write!(f, "modulus product too small for this inner dimension")
            }
            Error::ResidueOutOfRange => write!(f, "residue entry out of range for its modulus"),
            Error::BackendPrecondition(msg) => write!(f, "backend precondition violated: {msg}"),
            Error::AmbiguousReconstruction => write!(
                f,
                "product bound does not certify a unique reconstruction candidate"
            ),
            Error::Overflow => write!(f, "result exceeds the binary64 range"),
            Error::NoCrtSolution => write!(f, "no integer satisfies all congruences"),
            Error::NonUniqueCrtSolution => {
                write!(f, "more than one integer in range satisfies all congruences")
            }
            Error::SliceWidthUnusable { q } => {
                write!(f, "slice width is not positive for inner dimension {q}")
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
        }
    }
}
