use thiserror::Error;

/// Errors raised by the library.
///
/// Variants are grouped so that front ends can map them onto exit codes:
/// usage problems, resource refusals, and failures that would contradict a
/// proven statement (a singular system or an identity that does not vanish).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("indices belong to different shapes")]
    ShapeMismatch,

    #[error("digit {digit} is out of range for a factor of dimension {max}")]
    InvalidDigit { digit: u16, max: u32 },

    #[error("{0} is not reachable from the base index by shifts towards the target digit")]
    NotInShiftClosure(String),

    #[error("two centers share the corner {0:?}")]
    DuplicateCorner(Vec<u16>),

    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("prime {prime} is too small: exponents and factorials up to {bound} must be invertible (need p > {bound})")]
    PrimeTooSmall { prime: u64, bound: u64 },

    #[error("resource limit: {what} = {requested} exceeds the limit {limit}")]
    ResourceLimit {
        what: String,
        requested: u128,
        limit: u128,
    },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("certificate failed: {0}")]
    CertificateFailed(String),
}

impl Error {
    pub(crate) fn resource(what: impl Into<String>, requested: u128, limit: u128) -> Self {
        Error::ResourceLimit {
            what: what.into(),
            requested,
            limit,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
