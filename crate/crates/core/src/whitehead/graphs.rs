//! Local, stable, and ideal Whitehead graphs and the rotationless index.
//!
//! All three graphs live on direction sets: the local graph at a vertex
//! records which turns the iterated images cross there, the stable graph
//! restricts to fixed directions at a principal vertex, and the ideal
//! graph is the disjoint union of the stable graphs. The rotationless
//! index reads the component census of the ideal graph.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;
use thiserror::Error;

use crate::graphmap::{GraphMap, HalfEdge};

use super::pnp::PnpStatus;
use super::turns::{rotationless_data, taken_turns, Turn};

/// Graph on the directions at one vertex of the underlying graph.
/// Vertices are half-edges based there; edges are nondegenerate turns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalGraph {
    /// Base vertex in the underlying graph.
    pub vertex: usize,
    /// Direction vertices, ascending.
    pub directions: Vec<HalfEdge>,
    /// Turn edges; both directions of every turn appear in `directions`.
    pub edges: BTreeSet<Turn>,
}

impl LocalGraph {
    /// True when every direction lies in one component. Graphs with at
    /// most one direction count as connected.
    pub fn is_connected(&self) -> bool {
        let n = self.directions.len();
        if n <= 1 {
            return true;
        }
        let index: BTreeMap<HalfEdge, usize> =
            self.directions.iter().enumerate().map(|(i, &d)| (d, i)).collect();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            let d = self.directions[i];
            for t in &self.edges {
                let [x, y] = t.directions();
                let other = if x == d {
                    y
                } else if y == d {
                    x
                } else {
                    continue;
                };
                let j = index[&other];
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Vertex sets of the connected components, each ascending.
    pub fn components(&self) -> Vec<Vec<HalfEdge>> {
        let n = self.directions.len();
        let index: BTreeMap<HalfEdge, usize> =
            self.directions.iter().enumerate().map(|(i, &d)| (d, i)).collect();
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = count;
            let mut stack = vec![start];
            while let Some(i) = stack.pop() {
                let d = self.directions[i];
                for t in &self.edges {
                    let [x, y] = t.directions();
                    let other = if x == d {
                        y
                    } else if y == d {
                        x
                    } else {
                        continue;
                    };
                    let j = index[&other];
                    if comp[j] == usize::MAX {
                        comp[j] = count;
                        stack.push(j);
                    }
                }
            }
            count += 1;
        }
        let mut out = vec![Vec::new(); count];
        for (i, &c) in comp.iter().enumerate() {
            out[c].push(self.directions[i]);
        }
        out
    }
}

/// Local graphs at every vertex and stable graphs at the principal
/// vertices, computed at the rotationless power.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WhiteheadGraphs {
    /// Power raising the input to a rotationless map.
    pub power: u64,
    /// One local graph per vertex of the underlying graph.
    pub local: Vec<LocalGraph>,
    /// Stable graphs, keyed by principal vertex.
    pub stable: BTreeMap<usize, LocalGraph>,
}

impl WhiteheadGraphs {
    /// True when the local graph at every vertex is connected.
    pub fn all_local_connected(&self) -> bool {
        self.local.iter().all(LocalGraph::is_connected)
    }
}

/// Default cap on the letters a materialized iterate may hold, roughly
/// 160 MB of half-edges. Letter counts grow like `lambda^power`, so maps
/// with a large rotationless power blow through any fixed budget and the
/// computation must refuse rather than exhaust memory.
pub const ITERATE_LETTER_BUDGET: usize = 20_000_000;

/// Computes local and stable Whitehead graphs. A non-rotationless input
/// is raised to its rotationless power first; the power used is part of
/// the result. `None` when materializing that power would exceed
/// `max_letters` image letters.
pub fn whitehead_graphs(g: &GraphMap, max_letters: usize) -> Option<WhiteheadGraphs> {
    let data = rotationless_data(g);
    let h = g.power_bounded(data.power, max_letters)?;
    let closure = taken_turns(&h);
    let local = (0..h.graph().n_vertices())
        .map(|v| LocalGraph {
            vertex: v,
            directions: h.graph().halves_at(v),
            edges: closure.at_vertex(&h, v).copied().collect(),
        })
        .collect();
    let mut stable = BTreeMap::new();
    for &x in &data.principal_vertices {
        let mut fixed = data.periodic_directions_at[&x].clone();
        fixed.sort_unstable();
        let fixed_set: BTreeSet<HalfEdge> = fixed.iter().copied().collect();
        let edges = closure
            .at_vertex(&h, x)
            .filter(|t| {
                let [a, b] = t.directions();
                fixed_set.contains(&a) && fixed_set.contains(&b)
            })
            .copied()
            .collect();
        stable.insert(x, LocalGraph { vertex: x, directions: fixed, edges });
    }
    Some(WhiteheadGraphs { power: data.power, local, stable })
}

/// One connected component of the ideal Whitehead graph. Components
/// never straddle vertices because turns join directions at a common
/// vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IwComponent {
    /// Principal vertex carrying the component.
    pub vertex: usize,
    /// Fixed directions in the component, ascending.
    pub directions: Vec<HalfEdge>,
    /// Turn edges between those directions.
    pub edges: BTreeSet<Turn>,
}

impl IwComponent {
    /// Triangle test: three vertices joined by three distinct turns.
    pub fn is_triangle(&self) -> bool {
        self.directions.len() == 3 && self.edges.len() == 3
    }
}

/// Disjoint union of the stable Whitehead graphs over all principal
/// vertices, split into connected components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdealWhiteheadGraph {
    /// Rotationless power the computation ran at.
    pub power: u64,
    /// Connected components across all principal vertices.
    pub components: Vec<IwComponent>,
    /// True when the periodic Nielsen path search was inconclusive, so
    /// the graph may be missing identifications.
    pub provisional: bool,
}

impl IdealWhiteheadGraph {
    /// Component vertex counts, descending.
    pub fn census(&self) -> Vec<usize> {
        let mut k: Vec<usize> = self.components.iter().map(|c| c.directions.len()).collect();
        k.sort_unstable_by(|a, b| b.cmp(a));
        k
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WhiteheadError {
    /// A periodic Nielsen path exists, so the stable-graph formula for
    /// the ideal graph does not apply to this representative.
    #[error("representative carries a periodic Nielsen path")]
    PnpFound,
    /// The map is not an expanding irreducible self-map, so principal
    /// direction data does not describe an ideal Whitehead graph.
    #[error("map is not expanding irreducible")]
    NotExpanding,
    /// Materializing the rotationless power would exceed the letter
    /// budget, so stable graphs cannot be computed.
    #[error("rotationless power map exceeds the iterate letter budget")]
    IterateBudget,
}

/// Assembles the ideal Whitehead graph of an expanding irreducible map
/// from its stable graphs. `pnp` gates the formula: a found path is an
/// error, an inconclusive search marks the result provisional.
pub fn ideal_whitehead_graph(
    g: &GraphMap,
    pnp: &PnpStatus,
) -> Result<IdealWhiteheadGraph, WhiteheadError> {
    if matches!(pnp, PnpStatus::Found(_)) {
        return Err(WhiteheadError::PnpFound);
    }
    let pf = g.transition_matrix().pf().map_err(|_| WhiteheadError::NotExpanding)?;
    if pf.lambda <= 1.0 + 1e-9 {
        return Err(WhiteheadError::NotExpanding);
    }
    let graphs = whitehead_graphs(g);
    let mut components = Vec::new();
    for stable in graphs.stable.values() {
        for part in stable.components() {
            let set: BTreeSet<HalfEdge> = part.iter().copied().collect();
            let edges = stable
                .edges
                .iter()
                .filter(|t| set.contains(&t.directions()[0]))
                .copied()
                .collect();
            components.push(IwComponent { vertex: stable.vertex, directions: part, edges });
        }
    }
    Ok(IdealWhiteheadGraph {
        power: graphs.power,
        components,
        provisional: matches!(pnp, PnpStatus::Inconclusive),
    })
}

/// Rotationless index `i = Σ (1 - k_i / 2)` over the component census,
/// in exact rational arithmetic.
pub fn rotationless_index(iw: &IdealWhiteheadGraph) -> Rational64 {
    iw.census()
        .into_iter()
        .map(|k| Rational64::new(2 - k as i64, 2))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freegroup::FreeAutomorphism;

    fn rose(images: &[&str]) -> GraphMap {
        GraphMap::rose_map(&FreeAutomorphism::from_strings(images.len(), images, false).unwrap())
    }

    const AP: usize = 0;
    const BP: usize = 2;
    const BM: usize = 3;
    const CP: usize = 4;
    const CM: usize = 5;

    #[test]
    fn stable_graph_of_cubic_example() {
        let g = rose(&["b", "c", "ab"]);
        let graphs = whitehead_graphs(&g);
        assert_eq!(graphs.power, 6);
        let sw = &graphs.stable[&0];
        assert_eq!(sw.directions, vec![AP, BP, BM, CP, CM]);
        let expect: BTreeSet<Turn> = [
            Turn::new(BM, CP),
            Turn::new(CM, AP),
            Turn::new(BM, BP),
            Turn::new(CM, CP),
            Turn::new(BM, AP),
            Turn::new(CM, BP),
        ]
        .into_iter()
        .collect();
        assert_eq!(sw.edges, expect);
        assert!(sw.is_connected());
    }

    #[test]
    fn local_graph_of_cubic_example_is_connected() {
        let g = rose(&["b", "c", "ab"]);
        let graphs = whitehead_graphs(&g);
        assert_eq!(graphs.local.len(), 1);
        let lw = &graphs.local[0];
        assert_eq!(lw.directions.len(), 6);
        assert!(lw.is_connected());
        assert!(graphs.all_local_connected());
        // The stable graph is the induced subgraph on fixed directions.
        let sw = &graphs.stable[&0];
        for t in &sw.edges {
            assert!(lw.edges.contains(t));
        }
    }

    #[test]
    fn identity_local_graphs_have_no_edges() {
        let g = rose(&["a", "b", "c"]);
        let graphs = whitehead_graphs(&g);
        assert_eq!(graphs.power, 1);
        assert!(graphs.local[0].edges.is_empty());
        assert!(!graphs.local[0].is_connected());
    }

    #[test]
    fn ideal_graph_of_cubic_example() {
        let g = rose(&["b", "c", "ab"]);
        let iw = ideal_whitehead_graph(&g, &PnpStatus::NoneFoundUpToBound).unwrap();
        assert_eq!(iw.power, 6);
        assert_eq!(iw.census(), vec![5]);
        assert!(!iw.provisional);
        assert_eq!(rotationless_index(&iw), Rational64::new(-3, 2));
    }

    #[test]
    fn ideal_graph_gates() {
        let g = rose(&["b", "c", "ab"]);
        let fake = super::super::pnp::NielsenPath {
            turn: Turn::new(AP, BP),
            power: 1,
            sigma: vec![AP],
            left: super::super::pnp::Leg { path: vec![AP], partial: None },
            right: super::super::pnp::Leg { path: vec![BP], partial: None },
        };
        assert_eq!(
            ideal_whitehead_graph(&g, &PnpStatus::Found(fake)),
            Err(WhiteheadError::PnpFound)
        );
        let id = rose(&["a", "b", "c"]);
        assert_eq!(
            ideal_whitehead_graph(&id, &PnpStatus::NoneFoundUpToBound),
            Err(WhiteheadError::NotExpanding)
        );
        let iw = ideal_whitehead_graph(&g, &PnpStatus::Inconclusive).unwrap();
        assert!(iw.provisional);
    }

    #[test]
    fn index_census_oracles() {
        fn index_of(k: &[usize]) -> Rational64 {
            k.iter().map(|&k| Rational64::new(2 - k as i64, 2)).sum()
        }
        assert_eq!(index_of(&[3, 3, 3]), Rational64::new(-3, 2));
        assert_eq!(index_of(&[5]), Rational64::new(-3, 2));
        assert_eq!(index_of(&[3]), Rational64::new(-1, 2));
        assert_eq!(index_of(&[4, 3]), Rational64::new(-3, 2));
    }

    #[test]
    fn ideal_graph_invariant_under_powers() {
        let g = rose(&["b", "c", "ab"]);
        let base = ideal_whitehead_graph(&g, &PnpStatus::NoneFoundUpToBound).unwrap();
        for m in 2..=3 {
            let gm = g.power(m);
            let iw = ideal_whitehead_graph(&gm, &PnpStatus::NoneFoundUpToBound).unwrap();
            assert_eq!(iw.census(), base.census(), "census moved at power {m}");
            assert_eq!(rotationless_index(&iw), rotationless_index(&base));
        }
    }
}
