//! Exact-arithmetic verification engine for unit congruences in twisted
//! group rings of one-dimensional p-adic Lie groups over coefficient rings
//! O[[X_1..X_r]].
//!
//! Everything is computed in finite truncations (p-adic precision N, bounded
//! monomial degrees), with explicit denominator tracking instead of floating
//! point. The `suite` module drives the congruence and diagram checks; the
//! lower modules provide scalars, truncated series, Howell-form linear
//! algebra over Z/p^N, finite group models, and the ring maps.

pub mod padic;
pub mod series;
pub mod zpn;
pub mod pgroup;
pub mod gring;
pub mod cyclo;
pub mod logmaps;
pub mod sampler;
pub mod report;
pub mod suite;

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("operands belong to different configurations")]
    ConfigMismatch,
    #[error("element is not a unit")]
    NonUnit,
    #[error("residue is zero")]
    ZeroResidue,
    #[error("element is not in the radical")]
    NotInRadical,
    #[error("element is not in p times the ring")]
    NotInScaledIdeal,
    #[error("dimension mismatch")]
    DimensionMismatch,
    #[error("map is not an automorphism")]
    NotAutomorphism,
    #[error("automorphism order does not divide p^e")]
    OrderViolation,
    #[error("subgroups do not form the required chain")]
    NotSubgroupChain,
    #[error("subgroup chain violates the map's precondition")]
    BadChain,
    #[error("subgroup is not cyclic")]
    NotCyclic,
    #[error("cyclotomic reduction left nonzero higher coordinates")]
    NotGaloisStable,
    #[error("integral logarithm output failed the integrality test")]
    IntegralityViolation,
    #[error("element has a nonzero denominator")]
    NonIntegral,
    #[error("stated p-power denominator did not clear exactly")]
    DenominatorNotCleared,
    #[error("specialization point must have coordinates in pO")]
    BadSpecPoint,
    #[error("element is not invariant under the group action")]
    NotDeltaInvariant,
    #[error("precision guard exhausted: {0}")]
    PrecisionExhausted(String),
}

pub type Result<T> = std::result::Result<T, Error>;
