//! Marked metric graphs and homotopy equivalences between them.
//!
//! A [`MarkedGraph`] is a finite connected graph with positive edge
//! lengths, a basepoint, and a marking: one closed edge path per generator
//! of the reference free group, whose classes form a basis of the
//! fundamental group. A [`GraphMap`] is a self-map sending vertices to
//! vertices and edges to edge paths; its outer class is recovered by
//! [`GraphMap::induced_automorphism`].
//!
//! Graphs are stored with half-edges: edge `e` has halves `2e` (forward)
//! and `2e+1` (reverse), paired by xor 1. A directed path is a sequence of
//! half-edges with matching endpoints. Edge images are stored for forward
//! halves only, so reversal equivariance holds by construction.

mod graph;
mod map;
mod matrix;

pub use graph::{
    cyclic_tighten_path, tighten_path, EdgePath, GraphError, HalfEdge, MarkedGraph, MarkingCoords,
};
pub use map::{GraphMap, GraphMapError};
pub use matrix::{MatrixError, PerronFrobenius, Primitivity, TransitionMatrix};

/// Partner half-edge: the same edge traversed the other way.
#[inline]
pub fn partner(h: HalfEdge) -> HalfEdge {
    h ^ 1
}

/// Edge index of a half-edge.
#[inline]
pub fn edge_of(h: HalfEdge) -> usize {
    h >> 1
}

/// Forward half of an edge.
#[inline]
pub fn forward(e: usize) -> HalfEdge {
    e << 1
}

/// Whether a half-edge is the forward orientation of its edge.
#[inline]
pub fn is_forward(h: HalfEdge) -> bool {
    h & 1 == 0
}
