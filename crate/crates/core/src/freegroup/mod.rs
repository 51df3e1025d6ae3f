//! Reduced words and automorphisms of finitely generated free groups.
//!
//! Letters are nonzero signed integers: `k > 0` is the k-th basis element,
//! `k < 0` its inverse. Text form uses `a..z` for generators `1..=26` and
//! `A..Z` for inverses, so parsing and printing are limited to rank 26;
//! the in-memory representation has no such limit.

mod automorphism;
mod stallings;
mod word;

pub use automorphism::{FreeAutomorphism, Transvection};
pub use stallings::{fold_wedge_basis_check, invert_images, BasisCheck, NotBasisWitness};
pub use word::{Letter, Word, WordError};

/// Errors from automorphism-level operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AutomorphismError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("expected {expected} images, got {got}")]
    ImageCountMismatch { expected: usize, got: usize },
    #[error("image {index} is not freely reduced (enable auto-reduce to accept)")]
    UnreducedImage { index: usize },
    #[error("images do not form a basis: {witness}")]
    NotInvertible { witness: NotBasisWitness },
    #[error("rank mismatch: {left} vs {right}")]
    RankMismatch { left: usize, right: usize },
}
