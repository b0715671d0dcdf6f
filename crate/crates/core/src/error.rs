use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("slot grid requires delta > 0 and levels >= 1 (got delta {delta}, levels {levels})")]
    InvalidGrid { delta: f64, levels: u32 },

    #[error("quantizer input must be finite (got {0})")]
    NonFiniteInput(f64),

    #[error("alpha must lie strictly inside (0, 1) (got {0})")]
    AlphaOutOfRange(f64),

    /// Two counters share a slot, so their firing signals would overlap.
    #[error("counter collision between nodes {a} and {b}")]
    Collision { a: usize, b: usize },

    #[error("invalid counter frame: {0}")]
    InvalidFrame(String),

    #[error("invalid gap vector: {0}")]
    InvalidGapVector(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A run that was required to absorb hit its interaction cap first.
    #[error("interaction cap of {cap} exceeded before absorption")]
    CapExceeded { cap: u64 },

    /// Internal error: the absorbing-chain system cannot be singular for
    /// alpha in (0, 1).
    #[error("linear solve failed: {0}")]
    SingularSystem(String),
}

pub type Result<T> = std::result::Result<T, Error>;
