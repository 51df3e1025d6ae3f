//! Marked metric graph: storage, validation, wire format, and the
//! change of coordinates between edge loops and reference words.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{edge_of, forward, is_forward, partner};
use crate::freegroup::{fold_wedge_basis_check, invert_images, BasisCheck, FreeAutomorphism, Word};

/// Index of a half-edge. Edge `e` owns halves `2e` and `2e+1`.
pub type HalfEdge = usize;

/// Directed edge path: consecutive half-edges with matching endpoints.
pub type EdgePath = Vec<HalfEdge>;

/// Structural problem in a graph or its marking.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph has no vertices")]
    Empty,
    #[error("vertex index {0} out of range")]
    VertexOutOfRange(usize),
    #[error("edge length must be positive and finite")]
    BadLength,
    #[error("graph is not connected")]
    Disconnected,
    #[error("edge id {0:?} is empty, duplicated, or case-ambiguous")]
    BadEdgeId(String),
    #[error("unknown edge token {0:?} in marking")]
    UnknownEdgeToken(String),
    #[error("marking path {index} is not a closed path at the basepoint")]
    MarkingNotClosed { index: usize },
    #[error("marking has {marking} paths but the graph has first betti number {betti}")]
    RankMismatch { betti: usize, marking: usize },
    #[error("marking classes do not form a basis of the fundamental group")]
    MarkingNotBasis,
    #[error("half-edge sequence is not a path")]
    BrokenPath,
}

/// Finite connected metric graph with basepoint and marking.
///
/// The marking stores one closed basepoint path per reference generator.
/// Validation checks that these paths generate the fundamental group
/// freely, i.e. that their classes are a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedGraph {
    pub(crate) n_vertices: usize,
    /// Origin vertex per half-edge; length is twice the edge count.
    pub(crate) origin: Vec<usize>,
    /// Metric length per edge.
    pub(crate) lengths: Vec<f64>,
    pub(crate) basepoint: usize,
    /// Closed basepoint paths, one per reference generator.
    pub(crate) marking: Vec<EdgePath>,
    /// Display names per edge; lowercase, case-distinct.
    pub(crate) edge_names: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct EdgeJson {
    id: String,
    from: usize,
    to: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    length: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    vertices: usize,
    edges: Vec<EdgeJson>,
    basepoint: usize,
    marking: Vec<String>,
}

impl MarkedGraph {
    /// Builds a graph from raw parts and validates it.
    ///
    /// `edges` lists `(from, to)` per edge, `lengths` one positive length
    /// per edge, `marking` one closed basepoint path per generator.
    pub fn new(
        n_vertices: usize,
        edges: &[(usize, usize)],
        lengths: &[f64],
        basepoint: usize,
        marking: Vec<EdgePath>,
        edge_names: Option<Vec<String>>,
    ) -> Result<Self, GraphError> {
        let mut origin = Vec::with_capacity(edges.len() * 2);
        for &(a, b) in edges {
            origin.push(a);
            origin.push(b);
        }
        let names = match edge_names {
            Some(n) => n,
            None => default_edge_names(edges.len()),
        };
        let g = MarkedGraph {
            n_vertices,
            origin,
            lengths: lengths.to_vec(),
            basepoint,
            marking,
            edge_names: names,
        };
        g.validate()?;
        Ok(g)
    }

    /// The rose on `rank` petals: one vertex, identity marking, uniform
    /// lengths summing to one. Petals are named after the generators.
    pub fn rose(rank: usize) -> Self {
        let len = 1.0 / rank as f64;
        MarkedGraph {
            n_vertices: 1,
            origin: vec![0; 2 * rank],
            lengths: vec![len; rank],
            basepoint: 0,
            marking: (0..rank).map(|e| vec![forward(e)]).collect(),
            edge_names: default_edge_names(rank),
        }
    }

    pub fn rank(&self) -> usize {
        self.marking.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.lengths.len()
    }

    pub fn basepoint(&self) -> usize {
        self.basepoint
    }

    pub fn origin(&self, h: HalfEdge) -> usize {
        self.origin[h]
    }

    pub fn terminus(&self, h: HalfEdge) -> usize {
        self.origin[partner(h)]
    }

    pub fn length(&self, e: usize) -> f64 {
        self.lengths[e]
    }

    pub fn marking(&self) -> &[EdgePath] {
        &self.marking
    }

    pub fn edge_name(&self, e: usize) -> &str {
        &self.edge_names[e]
    }

    /// Total metric volume: the sum of edge lengths.
    pub fn volume(&self) -> f64 {
        self.lengths.iter().sum()
    }

    /// Scales all lengths so the volume becomes one.
    pub fn normalize_volume(&mut self) {
        let v = self.volume();
        for l in &mut self.lengths {
            *l /= v;
        }
    }

    /// Replaces all edge lengths; rejects a wrong count or nonpositive
    /// entries.
    pub fn set_lengths(&mut self, lengths: &[f64]) -> Result<(), GraphError> {
        if lengths.len() != self.n_edges() || lengths.iter().any(|l| !(l.is_finite() && *l > 0.0))
        {
            return Err(GraphError::BadLength);
        }
        self.lengths = lengths.to_vec();
        Ok(())
    }

    /// Replaces the marking, revalidating the whole graph. On failure the
    /// old marking is kept.
    pub fn set_marking(&mut self, marking: Vec<EdgePath>) -> Result<(), GraphError> {
        let old = std::mem::replace(&mut self.marking, marking);
        if let Err(e) = self.validate() {
            self.marking = old;
            return Err(e);
        }
        Ok(())
    }

    /// Metric length of a path.
    pub fn path_length(&self, path: &[HalfEdge]) -> f64 {
        path.iter().map(|&h| self.lengths[edge_of(h)]).sum()
    }

    /// Number of half-edges based at each vertex.
    pub fn valences(&self) -> Vec<usize> {
        let mut val = vec![0usize; self.n_vertices];
        for &v in &self.origin {
            val[v] += 1;
        }
        val
    }

    /// First betti number: E - V + 1 for a connected graph.
    pub fn betti(&self) -> usize {
        self.n_edges() + 1 - self.n_vertices
    }

    /// Half-edges based at `v`, in half-edge order.
    pub fn halves_at(&self, v: usize) -> Vec<HalfEdge> {
        (0..self.origin.len()).filter(|&h| self.origin[h] == v).collect()
    }

    /// Checks that consecutive half-edges share endpoints.
    pub fn is_path(&self, path: &[HalfEdge]) -> bool {
        if path.iter().any(|&h| h >= self.origin.len()) {
            return false;
        }
        path.windows(2).all(|w| self.terminus(w[0]) == self.origin(w[1]))
    }

    fn is_closed_at(&self, path: &[HalfEdge], v: usize) -> bool {
        match path.first() {
            None => true,
            Some(&h) => {
                self.origin(h) == v && self.terminus(*path.last().unwrap()) == v
            }
        }
    }

    pub(crate) fn validate(&self) -> Result<(), GraphError> {
        if self.n_vertices == 0 {
            return Err(GraphError::Empty);
        }
        if self.basepoint >= self.n_vertices {
            return Err(GraphError::VertexOutOfRange(self.basepoint));
        }
        for &v in &self.origin {
            if v >= self.n_vertices {
                return Err(GraphError::VertexOutOfRange(v));
            }
        }
        for &l in &self.lengths {
            if !(l.is_finite() && l > 0.0) {
                return Err(GraphError::BadLength);
            }
        }
        if self.edge_names.len() != self.n_edges() {
            return Err(GraphError::BadEdgeId(String::from("<count>")));
        }
        let mut seen = HashMap::new();
        for name in &self.edge_names {
            let lower = name.to_lowercase();
            if name.is_empty() || *name != lower || seen.insert(lower, ()).is_some() {
                return Err(GraphError::BadEdgeId(name.clone()));
            }
        }
        // Connectivity over undirected edges.
        let mut reach = vec![false; self.n_vertices];
        let mut stack = vec![self.basepoint];
        reach[self.basepoint] = true;
        while let Some(v) = stack.pop() {
            for h in 0..self.origin.len() {
                if self.origin[h] == v {
                    let w = self.terminus(h);
                    if !reach[w] {
                        reach[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        if reach.iter().any(|&r| !r) {
            return Err(GraphError::Disconnected);
        }
        if self.n_edges() + 1 < self.n_vertices {
            return Err(GraphError::Disconnected);
        }
        let betti = self.betti();
        if betti == 0 {
            // Trees carry no fundamental group; out of scope.
            return Err(GraphError::RankMismatch { betti: 0, marking: self.marking.len() });
        }
        if betti != self.marking.len() {
            return Err(GraphError::RankMismatch { betti, marking: self.marking.len() });
        }
        for (index, m) in self.marking.iter().enumerate() {
            if !self.is_path(m) {
                return Err(GraphError::BrokenPath);
            }
            if m.is_empty() || !self.is_closed_at(m, self.basepoint) {
                return Err(GraphError::MarkingNotClosed { index });
            }
        }
        // The marking must be a basis of the fundamental group.
        let coords = MarkingCoords::new(self)?;
        let _ = coords;
        Ok(())
    }

    /// Reads a graph from its JSON wire format.
    ///
    /// Edge lengths are optional; missing lengths default to the uniform
    /// metric of total volume one. Marking entries are space-separated
    /// edge ids, uppercase for reversed traversal.
    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let raw: GraphJson = serde_json::from_str(text)
            .map_err(|_| GraphError::BrokenPath)?;
        Self::from_json_value(raw)
    }

    fn from_json_value(raw: GraphJson) -> Result<Self, GraphError> {
        let n_edges = raw.edges.len();
        let uniform = if n_edges > 0 { 1.0 / n_edges as f64 } else { 1.0 };
        let mut edges = Vec::with_capacity(n_edges);
        let mut lengths = Vec::with_capacity(n_edges);
        let mut names = Vec::with_capacity(n_edges);
        let mut index_of = HashMap::new();
        for (e, rec) in raw.edges.iter().enumerate() {
            edges.push((rec.from, rec.to));
            lengths.push(rec.length.unwrap_or(uniform));
            let lower = rec.id.to_lowercase();
            if rec.id.is_empty() || rec.id != lower {
                return Err(GraphError::BadEdgeId(rec.id.clone()));
            }
            if index_of.insert(lower, e).is_some() {
                return Err(GraphError::BadEdgeId(rec.id.clone()));
            }
            names.push(rec.id.clone());
        }
        let mut marking = Vec::with_capacity(raw.marking.len());
        for spec in &raw.marking {
            let mut path = Vec::new();
            for token in spec.split_whitespace() {
                let lower = token.to_lowercase();
                let upper = token.to_uppercase();
                let e = *index_of
                    .get(&lower)
                    .ok_or_else(|| GraphError::UnknownEdgeToken(token.to_string()))?;
                if token == names[e] {
                    path.push(forward(e));
                } else if *token == upper && upper != names[e] {
                    path.push(partner(forward(e)));
                } else {
                    return Err(GraphError::UnknownEdgeToken(token.to_string()));
                }
            }
            marking.push(path);
        }
        MarkedGraph::new(raw.vertices, &edges, &lengths, raw.basepoint, marking, Some(names))
    }

    /// Serializes to the JSON wire format, lengths included.
    pub fn to_json(&self) -> String {
        let edges = (0..self.n_edges())
            .map(|e| EdgeJson {
                id: self.edge_names[e].clone(),
                from: self.origin(forward(e)),
                to: self.terminus(forward(e)),
                length: Some(self.lengths[e]),
            })
            .collect();
        let raw = GraphJson {
            vertices: self.n_vertices,
            edges,
            basepoint: self.basepoint,
            marking: self.marking.iter().map(|m| self.path_to_string(m)).collect(),
        };
        serde_json::to_string_pretty(&raw).expect("graph serialization")
    }

    /// Renders a path as space-separated edge ids, uppercase when reversed.
    pub fn path_to_string(&self, path: &[HalfEdge]) -> String {
        path.iter()
            .map(|&h| {
                let name = &self.edge_names[edge_of(h)];
                if is_forward(h) {
                    name.clone()
                } else {
                    name.to_uppercase()
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for MarkedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "graph with {} vertices, {} edges, rank {}",
            self.n_vertices,
            self.n_edges(),
            self.rank()
        )
    }
}

fn default_edge_names(n: usize) -> Vec<String> {
    if n <= 26 {
        (0..n).map(|e| ((b'a' + e as u8) as char).to_string()).collect()
    } else {
        (0..n).map(|e| format!("e{}", e + 1)).collect()
    }
}

/// Freely reduces a path in place by cancelling adjacent partner halves.
pub fn tighten_path(path: &mut EdgePath) {
    let mut out: EdgePath = Vec::with_capacity(path.len());
    for &h in path.iter() {
        if out.last() == Some(&partner(h)) {
            out.pop();
        } else {
            out.push(h);
        }
    }
    *path = out;
}

/// Freely and cyclically reduces a closed path in place.
pub fn cyclic_tighten_path(path: &mut EdgePath) {
    tighten_path(path);
    while path.len() >= 2 && *path.first().unwrap() == partner(*path.last().unwrap()) {
        path.pop();
        path.remove(0);
    }
}

/// Change of coordinates between closed edge paths and reference words.
///
/// Built on a spanning tree: non-tree edges index a free basis of the
/// fundamental group, the marking is expressed in that basis, and the
/// inverse substitution sends any closed basepoint path to the reference
/// word whose marking image it is homotopic to.
#[derive(Debug, Clone)]
pub struct MarkingCoords {
    /// Per vertex, the half-edge arriving from its tree parent.
    parent_half: Vec<Option<HalfEdge>>,
    /// Non-tree edges in edge order; entry `k` is the edge behind letter `k+1`.
    z_edges: Vec<usize>,
    z_index: Vec<Option<usize>>,
    /// Marking words in the non-tree basis.
    marking_in_z: Vec<Word>,
    /// Substitution expressing each non-tree generator in the reference basis.
    reference_of_z: FreeAutomorphism,
}

impl MarkingCoords {
    /// Fails with [`GraphError::MarkingNotBasis`] when the marking classes
    /// do not form a basis.
    pub fn new(graph: &MarkedGraph) -> Result<Self, GraphError> {
        let mut parent_half = vec![None; graph.n_vertices];
        let mut in_tree = vec![false; graph.n_edges()];
        let mut seen = vec![false; graph.n_vertices];
        seen[graph.basepoint] = true;
        let mut queue = std::collections::VecDeque::from([graph.basepoint]);
        while let Some(v) = queue.pop_front() {
            for h in 0..graph.origin.len() {
                if graph.origin[h] == v {
                    let w = graph.terminus(h);
                    if !seen[w] {
                        seen[w] = true;
                        in_tree[edge_of(h)] = true;
                        parent_half[w] = Some(h);
                        queue.push_back(w);
                    }
                }
            }
        }
        let mut z_edges = Vec::new();
        let mut z_index = vec![None; graph.n_edges()];
        for e in 0..graph.n_edges() {
            if !in_tree[e] {
                z_index[e] = Some(z_edges.len());
                z_edges.push(e);
            }
        }
        let mut coords = MarkingCoords {
            parent_half,
            z_edges,
            z_index,
            marking_in_z: Vec::new(),
            reference_of_z: FreeAutomorphism::identity(1),
        };
        let marking_in_z: Vec<Word> = graph
            .marking
            .iter()
            .map(|m| coords.loop_to_z(m))
            .collect();
        let rank = coords.z_edges.len();
        if rank != graph.rank() {
            return Err(GraphError::RankMismatch { betti: rank, marking: graph.rank() });
        }
        match fold_wedge_basis_check(rank, &marking_in_z) {
            BasisCheck::Basis => {}
            BasisCheck::NotBasis(_) => return Err(GraphError::MarkingNotBasis),
        }
        let inverse_images = invert_images(rank, &marking_in_z)
            .ok_or(GraphError::MarkingNotBasis)?;
        coords.marking_in_z = marking_in_z;
        coords.reference_of_z = FreeAutomorphism::new(rank, inverse_images)
            .map_err(|_| GraphError::MarkingNotBasis)?;
        Ok(coords)
    }

    /// Tree path from the basepoint to `v` (empty when `v` is the basepoint).
    pub fn tree_path_to(&self, graph: &MarkedGraph, v: usize) -> EdgePath {
        let mut path = Vec::new();
        let mut cur = v;
        while let Some(h) = self.parent_half[cur] {
            path.push(h);
            cur = graph.origin(h);
        }
        path.reverse();
        path
    }

    /// Reads a closed basepoint path as a word in the non-tree basis.
    pub fn loop_to_z(&self, path: &[HalfEdge]) -> Word {
        let letters: Vec<i32> = path
            .iter()
            .filter_map(|&h| {
                self.z_index[edge_of(h)].map(|k| {
                    let letter = (k + 1) as i32;
                    if is_forward(h) {
                        letter
                    } else {
                        -letter
                    }
                })
            })
            .collect();
        Word::new(letters).expect("nonzero letters")
    }

    /// Closed basepoint path spelling a word in the non-tree basis.
    pub fn z_to_loop(&self, graph: &MarkedGraph, word: &Word) -> EdgePath {
        let mut path = Vec::new();
        for &letter in word.letters() {
            let e = self.z_edges[letter.unsigned_abs() as usize - 1];
            let h = if letter > 0 { forward(e) } else { partner(forward(e)) };
            path.extend(self.tree_path_to(graph, graph.origin(h)));
            path.push(h);
            let mut back = self.tree_path_to(graph, graph.terminus(h));
            back.reverse();
            path.extend(back.into_iter().map(partner));
        }
        tighten_path(&mut path);
        path
    }

    /// Reference word of a closed basepoint path, read through the marking.
    ///
    /// The result `w` satisfies: the marking image of `w` is homotopic rel
    /// basepoint to the given path.
    pub fn loop_to_reference(&self, path: &[HalfEdge]) -> Word {
        self.reference_of_z.apply(&self.loop_to_z(path))
    }

    /// Closed basepoint path homotopic to the marking image of `word`.
    pub fn reference_to_loop(&self, graph: &MarkedGraph, word: &Word) -> EdgePath {
        let mut path = Vec::new();
        for &letter in word.letters() {
            let m = &graph.marking[letter.unsigned_abs() as usize - 1];
            if letter > 0 {
                path.extend_from_slice(m);
            } else {
                path.extend(m.iter().rev().map(|&h| partner(h)));
            }
        }
        tighten_path(&mut path);
        path
    }
}
