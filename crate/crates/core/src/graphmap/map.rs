//! Self-maps of marked graphs: storage, tightening, and the outer
//! automorphism a homotopy equivalence induces on the fundamental group.

use std::fmt;

use thiserror::Error;

use super::graph::{tighten_path, EdgePath, GraphError, HalfEdge, MarkedGraph, MarkingCoords};
use super::matrix::TransitionMatrix;
use super::{edge_of, forward, is_forward, partner};
use crate::freegroup::{AutomorphismError, FreeAutomorphism};

/// Problem with a graph self-map.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphMapError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("image of edge {0} does not run between the images of its endpoints")]
    EndpointMismatch(usize),
    #[error("vertex image {0} out of range")]
    VertexImageOutOfRange(usize),
    #[error("edge {0} has homotopically trivial image; collapse it instead of tightening")]
    DegenerateEdge(usize),
    #[error("map is not a homotopy equivalence: {0}")]
    NotHomotopyEquivalence(AutomorphismError),
}

/// A map from a marked graph to itself, sending vertices to vertices and
/// each edge to an edge path between the endpoint images.
///
/// Edge images are stored for forward halves; the image of a reversed
/// half is the reversed image path, so the map is orientation-equivariant
/// by construction. Images need not be freely reduced until
/// [`GraphMap::tighten`] is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMap {
    pub(crate) graph: MarkedGraph,
    pub(crate) vertex_images: Vec<usize>,
    pub(crate) edge_images: Vec<EdgePath>,
}

impl GraphMap {
    pub fn new(
        graph: MarkedGraph,
        vertex_images: Vec<usize>,
        edge_images: Vec<EdgePath>,
    ) -> Result<Self, GraphMapError> {
        let map = GraphMap { graph, vertex_images, edge_images };
        map.validate()?;
        Ok(map)
    }

    /// The rose map realizing an automorphism: petal `i` traverses the
    /// petals spelling the image of generator `i`.
    pub fn rose_map(phi: &FreeAutomorphism) -> Self {
        let graph = MarkedGraph::rose(phi.rank());
        let edge_images = phi
            .images()
            .iter()
            .map(|w| {
                w.letters()
                    .iter()
                    .map(|&l| {
                        let h = forward(l.unsigned_abs() as usize - 1);
                        if l > 0 {
                            h
                        } else {
                            partner(h)
                        }
                    })
                    .collect()
            })
            .collect();
        GraphMap { graph, vertex_images: vec![0], edge_images }
    }

    pub fn graph(&self) -> &MarkedGraph {
        &self.graph
    }

    pub fn vertex_image(&self, v: usize) -> usize {
        self.vertex_images[v]
    }

    /// Image path of an edge's forward half.
    pub fn edge_image(&self, e: usize) -> &EdgePath {
        &self.edge_images[e]
    }

    /// Image path of an arbitrary half-edge.
    pub fn half_image(&self, h: HalfEdge) -> EdgePath {
        let img = &self.edge_images[edge_of(h)];
        if is_forward(h) {
            img.clone()
        } else {
            img.iter().rev().map(|&x| partner(x)).collect()
        }
    }

    /// First half-edge of the image of `h`: the derivative on directions.
    /// `None` when the image is a point.
    pub fn direction_image(&self, h: HalfEdge) -> Option<HalfEdge> {
        let img = &self.edge_images[edge_of(h)];
        if is_forward(h) {
            img.first().copied()
        } else {
            img.last().map(|&x| partner(x))
        }
    }

    /// Image of a path: concatenated edge images, freely reduced.
    pub fn map_path(&self, path: &[HalfEdge]) -> EdgePath {
        let mut out = self.map_path_raw(path);
        tighten_path(&mut out);
        out
    }

    /// Image of a path without free reduction.
    pub fn map_path_raw(&self, path: &[HalfEdge]) -> EdgePath {
        let mut out = Vec::new();
        for &h in path {
            out.extend(self.half_image(h));
        }
        out
    }

    pub(crate) fn validate(&self) -> Result<(), GraphMapError> {
        if self.vertex_images.len() != self.graph.n_vertices() {
            return Err(GraphMapError::VertexImageOutOfRange(self.vertex_images.len()));
        }
        for &v in &self.vertex_images {
            if v >= self.graph.n_vertices() {
                return Err(GraphMapError::VertexImageOutOfRange(v));
            }
        }
        if self.edge_images.len() != self.graph.n_edges() {
            return Err(GraphMapError::EndpointMismatch(self.edge_images.len()));
        }
        for e in 0..self.graph.n_edges() {
            let img = &self.edge_images[e];
            let from = self.vertex_images[self.graph.origin(forward(e))];
            let to = self.vertex_images[self.graph.terminus(forward(e))];
            match img.first() {
                None => {
                    if from != to {
                        return Err(GraphMapError::EndpointMismatch(e));
                    }
                }
                Some(&h0) => {
                    if !self.graph.is_path(img)
                        || self.graph.origin(h0) != from
                        || self.graph.terminus(*img.last().unwrap()) != to
                    {
                        return Err(GraphMapError::EndpointMismatch(e));
                    }
                }
            }
        }
        Ok(())
    }

    /// Freely reduces every edge image in place.
    ///
    /// Fails when some image reduces to a point while its endpoints agree:
    /// the edge maps to a null-homotopic loop and should be collapsed by
    /// the caller, not silently erased.
    pub fn tighten(&mut self) -> Result<(), GraphMapError> {
        for e in 0..self.edge_images.len() {
            let was_nonempty = !self.edge_images[e].is_empty();
            tighten_path(&mut self.edge_images[e]);
            if was_nonempty && self.edge_images[e].is_empty() {
                return Err(GraphMapError::DegenerateEdge(e));
            }
        }
        Ok(())
    }

    /// The `k`-th iterate as a self-map of the same marked graph. Images
    /// are freely reduced at every step, so the result is tight even when
    /// iterates of a non-train-track map cancel.
    pub fn power(&self, k: u64) -> GraphMap {
        self.power_bounded(k, usize::MAX)
            .expect("letter count of an iterate overflowed usize")
    }

    /// The `k`-th iterate, or `None` once the projected letter count of
    /// some intermediate stage exceeds `max_letters`. The projection is
    /// the pre-cancellation image size, computed without allocating, so
    /// construction never materializes paths past the budget.
    pub fn power_bounded(&self, k: u64, max_letters: usize) -> Option<GraphMap> {
        assert!(k >= 1, "iterate exponent must be positive");
        let mut out = self.clone();
        for _ in 1..k {
            let projected = out
                .edge_images
                .iter()
                .flatten()
                .map(|&d| self.edge_images[edge_of(d)].len())
                .try_fold(0usize, usize::checked_add)?;
            if projected > max_letters {
                return None;
            }
            out.vertex_images = out.vertex_images.iter().map(|&v| self.vertex_image(v)).collect();
            out.edge_images = out.edge_images.iter().map(|p| self.map_path(p)).collect();
        }
        Some(out)
    }

    /// Transition matrix: entry `(e, f)` counts traversals of `f` in
    /// either direction by the image of `e`.
    pub fn transition_matrix(&self) -> TransitionMatrix {
        let n = self.graph.n_edges();
        let mut counts = vec![0u64; n * n];
        for (e, img) in self.edge_images.iter().enumerate() {
            for &h in img {
                counts[e * n + edge_of(h)] += 1;
            }
        }
        TransitionMatrix::new(n, counts)
    }

    /// The outer automorphism this map induces on the reference free
    /// group through the marking, with basepoint displacement corrected
    /// along a tree path.
    pub fn induced_automorphism(&self) -> Result<FreeAutomorphism, GraphMapError> {
        let coords = MarkingCoords::new(&self.graph)?;
        let b = self.graph.basepoint();
        let rho = coords.tree_path_to(&self.graph, self.vertex_images[b]);
        let rank = self.graph.rank();
        let mut images = Vec::with_capacity(rank);
        for m in self.graph.marking() {
            let mut p = rho.clone();
            p.extend(self.map_path_raw(m));
            p.extend(rho.iter().rev().map(|&h| partner(h)));
            tighten_path(&mut p);
            images.push(coords.loop_to_reference(&p));
        }
        let phi = FreeAutomorphism::new(rank, images)
            .map_err(GraphMapError::NotHomotopyEquivalence)?;
        match phi.verify_basis() {
            crate::freegroup::BasisCheck::Basis => Ok(phi),
            crate::freegroup::BasisCheck::NotBasis(witness) => Err(
                GraphMapError::NotHomotopyEquivalence(AutomorphismError::NotInvertible { witness }),
            ),
        }
    }
}

impl fmt::Display for GraphMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in 0..self.graph.n_edges() {
            writeln!(
                f,
                "{} -> {}",
                self.graph.edge_name(e),
                self.graph.path_to_string(&self.edge_images[e])
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freegroup::Word;

    fn aut(images: &[&str]) -> FreeAutomorphism {
        FreeAutomorphism::from_strings(images.len(), images, false).unwrap()
    }

    #[test]
    fn rose_map_images() {
        let g = GraphMap::rose_map(&aut(&["ab", "a"]));
        assert_eq!(g.edge_image(0), &vec![0, 2]);
        assert_eq!(g.edge_image(1), &vec![0]);
        // Reversed petal a maps to BA, whose first direction is B.
        assert_eq!(g.direction_image(1), Some(3));
        assert_eq!(g.direction_image(3), Some(1));
    }

    #[test]
    fn half_image_reverses() {
        let g = GraphMap::rose_map(&aut(&["ab", "a"]));
        // Image of reversed petal a is the reverse of a's image path.
        assert_eq!(g.half_image(1), vec![3, 1]);
    }

    #[test]
    fn map_path_reduces() {
        let g = GraphMap::rose_map(&aut(&["ab", "A"]));
        // Path a b maps to (ab)(A) which tightens to just a... as paths:
        // a -> [0, 2], b -> [1]; concatenation [0, 2, 1] tightens by
        // cancelling 2 with 1? They are not partners (1 = reverse of 0).
        let img = g.map_path(&[0, 2]);
        assert_eq!(img, vec![0, 2, 1]);
        let img2 = g.map_path(&[2, 0]);
        // b a -> (A)(ab) = [1, 0, 2] with 1,0 partners cancelling.
        assert_eq!(img2, vec![2]);
    }

    #[test]
    fn tighten_flags_degenerate_edge() {
        let graph = MarkedGraph::rose(2);
        // a maps to b B (null-homotopic), b to b.
        let mut map =
            GraphMap::new(graph, vec![0], vec![vec![2, 3], vec![2]]).unwrap();
        assert_eq!(map.tighten(), Err(GraphMapError::DegenerateEdge(0)));
    }

    #[test]
    fn endpoint_validation() {
        let text = r#"{
            "vertices": 2,
            "edges": [
                {"id": "p", "from": 0, "to": 1},
                {"id": "q", "from": 0, "to": 1},
                {"id": "r", "from": 0, "to": 1}
            ],
            "basepoint": 0,
            "marking": ["p Q", "q R"]
        }"#;
        let graph = MarkedGraph::from_json(text).unwrap();
        // Identity on vertices, p -> q is fine; p -> reversed q is not.
        assert!(GraphMap::new(
            graph.clone(),
            vec![0, 1],
            vec![vec![2], vec![2], vec![4]]
        )
        .is_ok());
        assert!(matches!(
            GraphMap::new(graph, vec![0, 1], vec![vec![3], vec![2], vec![4]]),
            Err(GraphMapError::EndpointMismatch(0))
        ));
    }

    #[test]
    fn induced_automorphism_of_rose_map_is_exact() {
        for images in [&["b", "c", "ab"][..], &["ab", "b", "c"][..], &["Ca", "a", "cb"][..]] {
            let phi = aut(images);
            let map = GraphMap::rose_map(&phi);
            assert_eq!(map.induced_automorphism().unwrap(), phi);
        }
    }

    #[test]
    fn induced_automorphism_on_theta_graph() {
        // Theta graph marked with a = p q^-1, b = q r^-1; the map swapping
        // p and r while fixing q induces a genuine automorphism.
        let text = r#"{
            "vertices": 2,
            "edges": [
                {"id": "p", "from": 0, "to": 1},
                {"id": "q", "from": 0, "to": 1},
                {"id": "r", "from": 0, "to": 1}
            ],
            "basepoint": 0,
            "marking": ["p Q", "q R"]
        }"#;
        let graph = MarkedGraph::from_json(text).unwrap();
        let map = GraphMap::new(graph, vec![0, 1], vec![vec![4], vec![2], vec![0]]).unwrap();
        let phi = map.induced_automorphism().unwrap();
        // a = [p Q] maps to [r Q] = (q r^-1)^-1 = b^-1; b = [q R] maps to
        // [q P] = (p q^-1)^-1 = a^-1.
        assert_eq!(phi.image(1), &Word::parse("B", true).unwrap());
        assert_eq!(phi.image(2), &Word::parse("A", true).unwrap());
    }

    #[test]
    fn degree_two_map_is_not_homotopy_equivalence() {
        let graph = MarkedGraph::rose(1);
        let map = GraphMap::new(graph, vec![0], vec![vec![0, 0]]).unwrap();
        assert!(matches!(
            map.induced_automorphism(),
            Err(GraphMapError::NotHomotopyEquivalence(_))
        ));
    }
}
