use thiserror::Error;

use crate::residue::Modulus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("precision exponent must be at least 1")]
    ZeroPrecision,

    #[error("ring size {p}^{k} does not fit in 62 bits")]
    ModulusTooLarge { p: u64, k: u32 },

    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(Modulus, Modulus),

    #[error("{value} is not a unit mod {modulus} (valuation {valuation})")]
    NotUnit {
        value: u64,
        modulus: Modulus,
        valuation: u32,
    },

    #[error("cannot reduce from precision {from} to higher precision {to}")]
    PrecisionLift { from: u32, to: u32 },

    #[error("matrix is singular mod p: rank {rank} of {size}")]
    Singular { rank: usize, size: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("enumeration needs {needed} candidates, budget is {budget}")]
    Budget { needed: u128, budget: u64 },

    #[error("invalid record: {0}")]
    Format(String),

    /// An internal consistency check failed. Always a bug.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}
