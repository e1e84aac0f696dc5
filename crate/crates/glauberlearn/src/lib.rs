//! Ising model simulation and learning toolkit.
//!
//! The crate generates spin data under a family of block dynamics (exact
//! i.i.d., Glauber, block updates, round-robin, M-regime, adversarial
//! Glauber) and recovers the interaction matrix and external fields with
//! node-wise l1-constrained logistic regression. Small systems support
//! exact inference by enumeration, which backs the test oracles and the
//! diagnostic probes.

pub mod cli;
pub mod dynamics;
pub mod generators;
pub mod ising;
pub mod learner;
pub mod regression;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("site index {0} out of range for n={1}")]
    IndexOutOfRange(usize, usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("block of size {0} exceeds the enumeration guard of {1} sites")]
    BlockTooLarge(usize, usize),
    #[error("block must be nonempty")]
    EmptyBlock,
    #[error("n={0} exceeds the enumeration guard of {1} sites")]
    TooManySites(usize, usize),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("node {0} has no samples")]
    EmptySampleSet(usize),
    #[error("solver failed to converge: {0}")]
    NonConvergence(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for configuration problems, 3 for
    /// guard violations, 4 for numerical non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::TooManySites(..) | Error::BlockTooLarge(..) => 3,
            Error::NonConvergence(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Derives a child seed from a master seed and a labeled stream.
///
/// All randomness in an experiment flows from a single 64-bit master seed;
/// child streams are addressed as (label, index), e.g. ("chain", 3) or
/// ("node", 7). The derivation hashes the label with FNV-1a, mixes in the
/// index, and finalizes with the splitmix64 permutation so nearby
/// (master, index) pairs land far apart.
pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut z = master
        ^ h.rotate_left(17)
        ^ index.wrapping_mul(0x9e3779b97f4a7c15);
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_seed_is_deterministic_and_label_sensitive() {
        assert_eq!(derive_seed(7, "chain", 0), derive_seed(7, "chain", 0));
        assert_ne!(derive_seed(7, "chain", 0), derive_seed(7, "chain", 1));
        assert_ne!(derive_seed(7, "chain", 0), derive_seed(7, "node", 0));
        assert_ne!(derive_seed(7, "chain", 0), derive_seed(8, "chain", 0));
    }
}
