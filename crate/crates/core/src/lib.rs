//! Computational toolkit for outer automorphisms of free groups.
//!
//! The library is organized bottom-up:
//!
//! * [`freegroup`]: reduced words, free automorphisms, basis certification
//!   and inversion through Stallings folding.
//! * [`graphmap`]: marked metric graphs, graph self-maps, transition
//!   matrices and Perron-Frobenius data.
//! * [`trainfold`]: elementary moves (subdivision, folds, collapses),
//!   Stallings fold decompositions, and the train track algorithm.
//! * [`whitehead`]: direction maps, rotationless powers, local and stable
//!   Whitehead graphs, the ideal Whitehead graph, the rotationless index,
//!   periodic Nielsen path search, and the classification verdicts.
//! * [`outerspace`]: volume-normalized marked graphs, candidate loops,
//!   asymmetric Lipschitz distances, free factor projections, and points
//!   along periodic fold paths.
//! * [`randomwalk`]: reproducible random products of automorphisms and
//!   checkpoint statistics for the classification pipeline.
//!
//! All verdicts that depend on bounded searches are three-valued: certified
//! yes, certified no, or unresolved. No routine silently upgrades an
//! unresolved answer.

pub mod freegroup;
pub mod graphmap;
pub mod outerspace;
pub mod randomwalk;
pub mod trainfold;
pub mod whitehead;

pub use freegroup::{FreeAutomorphism, Word};
pub use graphmap::{GraphMap, MarkedGraph};

