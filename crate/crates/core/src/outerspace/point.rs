//! Points of Outer space: volume-one marked metric graphs.

use thiserror::Error;

use crate::freegroup::FreeAutomorphism;
use crate::graphmap::{
    edge_of, forward, partner, tighten_path, EdgePath, GraphError, MarkedGraph, MarkingCoords,
};
use crate::trainfold::DecomposeError;

/// Volume deviation allowed by the point invariant.
pub const VOLUME_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum OuterSpaceError {
    #[error("edge {edge} has nonpositive length")]
    NonPositiveLength { edge: usize },
    #[error("volume is {volume}, not one")]
    NotUnitVolume { volume: f64 },
    #[error("vertex {vertex} has valence {valence}, below three")]
    LowValence { vertex: usize, valence: usize },
    #[error("rank {left} does not match rank {right}")]
    RankMismatch { left: usize, right: usize },
    #[error("path is not a closed essential loop")]
    NotALoop,
    #[error("map is not expanding irreducible")]
    NotExpanding,
    #[error("map is not a train track map")]
    NotTrainTrack,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
}

/// A point of Outer space: a marked metric graph of volume one with all
/// vertices of valence at least three. The marking coordinates are built
/// once at construction, which also certifies the marking is a basis.
#[derive(Debug, Clone)]
pub struct OuterSpacePoint {
    graph: MarkedGraph,
    coords: MarkingCoords,
}

impl OuterSpacePoint {
    pub fn new(graph: MarkedGraph) -> Result<Self, OuterSpaceError> {
        for e in 0..graph.n_edges() {
            if !(graph.length(e) > 0.0 && graph.length(e).is_finite()) {
                return Err(OuterSpaceError::NonPositiveLength { edge: e });
            }
        }
        let volume = graph.volume();
        if (volume - 1.0).abs() > VOLUME_TOL {
            return Err(OuterSpaceError::NotUnitVolume { volume });
        }
        for (vertex, &valence) in graph.valences().iter().enumerate() {
            if valence < 3 {
                return Err(OuterSpaceError::LowValence { vertex, valence });
            }
        }
        let coords = MarkingCoords::new(&graph)?;
        Ok(OuterSpacePoint { graph, coords })
    }

    pub fn graph(&self) -> &MarkedGraph {
        &self.graph
    }

    pub fn rank(&self) -> usize {
        self.graph.rank()
    }

    pub(crate) fn coords(&self) -> &MarkingCoords {
        &self.coords
    }

    /// The point moved by the right action of `phi`: same metric graph,
    /// marking precomposed with `phi`. Generator `i` is marked by the
    /// realization of its `phi`-image through the old marking.
    pub fn twisted(&self, phi: &FreeAutomorphism) -> Result<OuterSpacePoint, OuterSpaceError> {
        if phi.rank() != self.rank() {
            return Err(OuterSpaceError::RankMismatch { left: self.rank(), right: phi.rank() });
        }
        let marking: Vec<EdgePath> = (0..self.rank())
            .map(|i| self.coords.reference_to_loop(&self.graph, phi.image(i + 1)))
            .collect();
        let mut graph = self.graph.clone();
        graph.set_marking(marking)?;
        OuterSpacePoint::new(graph)
    }
}

/// Scales a positive metric to volume one and certifies the point.
pub fn normalize_volume(graph: &MarkedGraph) -> Result<OuterSpacePoint, OuterSpaceError> {
    for e in 0..graph.n_edges() {
        if !(graph.length(e) > 0.0 && graph.length(e).is_finite()) {
            return Err(OuterSpaceError::NonPositiveLength { edge: e });
        }
    }
    let mut graph = graph.clone();
    graph.normalize_volume();
    OuterSpacePoint::new(graph)
}

/// Merges away every valence-two vertex. The metric point is unchanged:
/// each merge replaces a two-edge path by one edge of the summed length
/// and rewrites the marking through it. A valence-two basepoint is first
/// relocated to a neighbor, conjugating the marking by the connector.
pub(crate) fn smooth_valence_two(graph: &MarkedGraph) -> MarkedGraph {
    let mut g = graph.clone();
    loop {
        let valences = g.valences();
        let Some(v) = (0..g.n_vertices()).position(|v| valences[v] == 2) else {
            return g;
        };
        g = smooth_one(&g, v);
    }
}

fn smooth_one(g: &MarkedGraph, v: usize) -> MarkedGraph {
    let halves = g.halves_at(v);
    let (p, q) = (halves[0], halves[1]);
    let (ep, eq) = (edge_of(p), edge_of(q));
    // Both halves on one edge would mean an isolated circle component,
    // impossible in a connected graph of rank at least one... except the
    // rank-one circle itself, which has no valence-three representative.
    assert_ne!(ep, eq, "circle components cannot be smoothed");

    let mut marking: Vec<EdgePath> = g.marking().to_vec();
    for m in &mut marking {
        tighten_path(m);
    }
    let mut basepoint = g.basepoint();
    if basepoint == v {
        // Conjugate every marking loop over to terminus(p).
        basepoint = g.terminus(p);
        for m in &mut marking {
            let mut out = vec![partner(p)];
            out.extend_from_slice(m);
            out.push(p);
            tighten_path(&mut out);
            *m = out;
        }
    }

    let vmap = |w: usize| w - usize::from(w > v);
    let mut new_index = vec![usize::MAX; g.n_edges()];
    let mut edges = Vec::new();
    let mut lengths = Vec::new();
    let mut names = Vec::new();
    for e in 0..g.n_edges() {
        if e == ep || e == eq {
            continue;
        }
        new_index[e] = edges.len();
        edges.push((vmap(g.origin(forward(e))), vmap(g.terminus(forward(e)))));
        lengths.push(g.length(e));
        names.push(g.edge_name(e).to_string());
    }
    let f_fwd = forward(edges.len());
    edges.push((vmap(g.terminus(p)), vmap(g.terminus(q))));
    lengths.push(g.length(ep) + g.length(eq));
    names.push(g.edge_name(ep).to_string());

    // A tight path through v always enters by one of partner(p),
    // partner(q) and leaves by the other half, so crossings of the two
    // merged edges come in straight-through pairs.
    let marking = marking
        .iter()
        .map(|m| {
            let mut out = Vec::with_capacity(m.len());
            let mut i = 0;
            while i < m.len() {
                let h = m[i];
                if h == partner(p) {
                    debug_assert_eq!(m.get(i + 1), Some(&q));
                    out.push(f_fwd);
                    i += 2;
                } else if h == partner(q) {
                    debug_assert_eq!(m.get(i + 1), Some(&p));
                    out.push(partner(f_fwd));
                    i += 2;
                } else {
                    debug_assert!(edge_of(h) != ep && edge_of(h) != eq);
                    let e = new_index[edge_of(h)];
                    out.push(forward(e) + (h & 1));
                    i += 1;
                }
            }
            out
        })
        .collect();

    MarkedGraph::new(g.n_vertices() - 1, &edges, &lengths, vmap(basepoint), marking, Some(names))
        .expect("smoothing preserves a valid marked graph")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rose_with_lengths(lengths: &[f64]) -> MarkedGraph {
        let rank = lengths.len();
        let edges: Vec<(usize, usize)> = (0..rank).map(|_| (0, 0)).collect();
        let marking: Vec<EdgePath> = (0..rank).map(|e| vec![forward(e)]).collect();
        MarkedGraph::new(1, &edges, lengths, 0, marking, None).unwrap()
    }

    #[test]
    fn normalization_scales_by_the_volume() {
        let p = normalize_volume(&rose_with_lengths(&[2.0, 2.0])).unwrap();
        assert_eq!(p.graph().length(0), 0.5);
        assert_eq!(p.graph().length(1), 0.5);
        let p = normalize_volume(&rose_with_lengths(&[1.0, 2.0, 3.0])).unwrap();
        let got: Vec<f64> = (0..3).map(|e| p.graph().length(e)).collect();
        for (g, want) in got.iter().zip([1.0 / 6.0, 1.0 / 3.0, 0.5]) {
            assert!((g - want).abs() < 1e-15);
        }
    }

    #[test]
    fn normalized_input_is_unchanged() {
        let p = normalize_volume(&rose_with_lengths(&[0.5, 0.5])).unwrap();
        assert_eq!(p.graph().length(0), 0.5);
        assert!(OuterSpacePoint::new(p.graph().clone()).is_ok());
    }

    #[test]
    fn invariants_are_enforced() {
        let bad = rose_with_lengths(&[0.25, 0.25]);
        assert!(matches!(
            OuterSpacePoint::new(bad),
            Err(OuterSpaceError::NotUnitVolume { .. })
        ));
        // Subdivided petal: the new vertex has valence two.
        let g = MarkedGraph::new(
            2,
            &[(0, 0), (0, 1), (1, 0)],
            &[0.5, 0.25, 0.25],
            0,
            vec![vec![0], vec![2, 4]],
            None,
        )
        .unwrap();
        assert!(matches!(
            OuterSpacePoint::new(g),
            Err(OuterSpaceError::LowValence { vertex: 1, valence: 2 })
        ));
    }

    #[test]
    fn smoothing_merges_a_subdivided_petal() {
        let g = MarkedGraph::new(
            2,
            &[(0, 0), (0, 1), (1, 0)],
            &[0.5, 0.25, 0.25],
            0,
            vec![vec![0], vec![2, 4]],
            None,
        )
        .unwrap();
        let s = smooth_valence_two(&g);
        assert_eq!(s.n_vertices(), 1);
        assert_eq!(s.n_edges(), 2);
        assert_eq!(s.volume(), 1.0);
        let p = OuterSpacePoint::new(s).unwrap();
        assert_eq!(p.rank(), 2);
    }

    #[test]
    fn smoothing_relocates_a_valence_two_basepoint() {
        // Same subdivided rose, but based at the valence-two vertex.
        let g = MarkedGraph::new(
            2,
            &[(0, 0), (0, 1), (1, 0)],
            &[0.5, 0.25, 0.25],
            1,
            vec![vec![4, 0, 2], vec![4, 2]],
            None,
        )
        .unwrap();
        let s = smooth_valence_two(&g);
        assert_eq!(s.n_vertices(), 1);
        assert!(OuterSpacePoint::new(s).is_ok());
    }

    #[test]
    fn twist_by_identity_preserves_the_marking() {
        let p = normalize_volume(&rose_with_lengths(&[0.5, 0.5])).unwrap();
        let t = p.twisted(&FreeAutomorphism::identity(2)).unwrap();
        assert_eq!(t.graph().marking(), p.graph().marking());
    }
}
