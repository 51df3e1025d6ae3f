//! Stallings fold decomposition of a graph self-map.
//!
//! The decomposer carries a changing domain graph mapped into a frozen
//! codomain copy of the input's graph. Domain edges are first subdivided
//! until each maps over a single codomain half, then pairs of directions
//! with equal images are folded one at a time until the map is a graph
//! isomorphism. Each stage is recorded with the domain graph it produced.
//!
//! The outer-class bookkeeping rides on the marking: the domain keeps the
//! input's marking (rewritten through every move), so at any stage the
//! composite "marking of domain, pushed through the map, read in the
//! codomain's marking coordinates" is the induced automorphism of the input.
//! That quantity is constant across stages, which is the recomposition
//! soundness property tests verify.

use thiserror::Error;

use crate::freegroup::{AutomorphismError, FreeAutomorphism};
use crate::graphmap::{
    edge_of, forward, is_forward, partner, tighten_path, EdgePath, GraphError, GraphMap, HalfEdge,
    MarkedGraph, MarkingCoords,
};

use super::sequence::{FoldSequence, FoldStep};

#[derive(Debug, Error)]
pub enum DecomposeError {
    /// An edge with an empty image cannot appear in a decomposable map;
    /// collapse such edges first.
    #[error("edge {0} has an empty image; collapse pretrivial edges before decomposing")]
    EmptyEdgeImage(usize),
    /// Folding terminated but the residual map is not a graph isomorphism,
    /// so the input was not a homotopy equivalence.
    #[error("fold sequence did not terminate in a graph isomorphism")]
    NotEquivalence,
    /// A fold tried to identify a loop with itself or two parallel edges,
    /// which would change the fundamental group.
    #[error("fold would drop rank; input is not a homotopy equivalence")]
    RankDrop,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Automorphism(#[from] AutomorphismError),
}

/// A map from a mutable domain graph to a frozen codomain. Edge images are
/// codomain paths indexed by domain edge; `img_v` are codomain vertices.
struct Decomposer {
    dom: MarkedGraph,
    img_v: Vec<usize>,
    img_e: Vec<EdgePath>,
}

impl Decomposer {
    fn half_image(&self, h: HalfEdge) -> EdgePath {
        let img = &self.img_e[edge_of(h)];
        if is_forward(h) {
            img.clone()
        } else {
            img.iter().rev().map(|&x| partner(x)).collect()
        }
    }

    /// Image of a domain path as a codomain path, freely reduced.
    fn map_path(&self, path: &[HalfEdge]) -> EdgePath {
        let mut out = Vec::new();
        for &h in path {
            out.extend(self.half_image(h));
        }
        tighten_path(&mut out);
        out
    }

    /// Splits domain edge `e` so its front piece maps over exactly the
    /// first `k` halves of its image. Only the marking lives in the domain,
    /// so unlike self-map subdivision no image paths need rewriting.
    fn subdivide(&mut self, codomain: &MarkedGraph, e: usize, k: usize) -> f64 {
        let img = self.img_e[e].clone();
        let m = img.len();
        debug_assert!(k >= 1 && k < m);
        let front: f64 = img[..k].iter().map(|&h| codomain.length(edge_of(h))).sum();
        let back: f64 = img[k..].iter().map(|&h| codomain.length(edge_of(h))).sum();
        let ratio = if front + back > 0.0 { front / (front + back) } else { 0.5 };

        let w = self.dom.n_vertices;
        self.dom.n_vertices += 1;
        let n = self.dom.n_edges();
        let old_terminus = self.dom.origin[partner(forward(e))];
        self.dom.origin[partner(forward(e))] = w;
        self.dom.origin.push(w);
        self.dom.origin.push(old_terminus);
        let l = self.dom.lengths[e];
        self.dom.lengths[e] = l * ratio;
        self.dom.lengths.push(l * (1.0 - ratio));
        let base = self.dom.edge_names[e].clone();
        let name = (1..)
            .map(|i| format!("{base}{i}"))
            .find(|cand| !self.dom.edge_names.iter().any(|n| n == cand))
            .expect("fresh name exists");
        self.dom.edge_names.push(name);

        self.img_v.push(codomain.origin(partner(img[k - 1])));
        self.img_e[e] = img[..k].to_vec();
        self.img_e.push(img[k..].to_vec());

        // Marking crossings of e now cross both pieces.
        let he_fwd = forward(e);
        let he_bwd = partner(he_fwd);
        let n_fwd = forward(n);
        for mpath in &mut self.dom.marking {
            if !mpath.iter().any(|&h| edge_of(h) == e) {
                continue;
            }
            let mut out = Vec::with_capacity(mpath.len() + 2);
            for &h in mpath.iter() {
                if h == he_fwd {
                    out.push(he_fwd);
                    out.push(n_fwd);
                } else if h == he_bwd {
                    out.push(partner(n_fwd));
                    out.push(he_bwd);
                } else {
                    out.push(h);
                }
            }
            *mpath = out;
        }
        ratio
    }

    /// Identifies the edges of two directions with equal single-half images,
    /// merging their far endpoints. Errors when the identification would
    /// change the fundamental group.
    fn fold(&mut self, h1: HalfEdge, h2: HalfEdge) -> Result<(), DecomposeError> {
        let e1 = edge_of(h1);
        let e2 = edge_of(h2);
        if e1 == e2 {
            return Err(DecomposeError::RankDrop);
        }
        let w1 = self.dom.origin[partner(h1)];
        let w2 = self.dom.origin[partner(h2)];
        if w1 == w2 {
            return Err(DecomposeError::RankDrop);
        }
        debug_assert_eq!(self.half_image(h1), self.half_image(h2));
        debug_assert_eq!(self.img_v[w1], self.img_v[w2]);

        // Redirect traversals of e2 onto e1, matching germ orientation.
        let (ra1, ra2) = (partner(h1), partner(h2));
        for mpath in &mut self.dom.marking {
            for h in mpath.iter_mut() {
                if *h == h2 {
                    *h = h1;
                } else if *h == ra2 {
                    *h = ra1;
                }
            }
        }
        self.dom.lengths[e1] = (self.dom.lengths[e1] + self.dom.lengths[e2]) / 2.0;

        // Drop edge e2.
        let hb = forward(e2);
        self.dom.origin.drain(hb..hb + 2);
        self.dom.lengths.remove(e2);
        self.dom.edge_names.remove(e2);
        self.img_e.remove(e2);
        for mpath in &mut self.dom.marking {
            for h in mpath.iter_mut() {
                debug_assert!(edge_of(*h) != e2);
                if *h > hb + 1 {
                    *h -= 2;
                }
            }
        }

        // Merge w2 into w1 and compact.
        let (keep, drop) = (w1.min(w2), w1.max(w2));
        let remap = |v: usize| {
            let v = if v == drop { keep } else { v };
            v - usize::from(v > drop)
        };
        for v in self.dom.origin.iter_mut() {
            *v = remap(*v);
        }
        self.dom.basepoint = remap(self.dom.basepoint);
        self.img_v.remove(drop);
        self.dom.n_vertices -= 1;

        for mpath in &mut self.dom.marking {
            tighten_path(mpath);
        }
        Ok(())
    }

    /// The composite outer automorphism of the current stage: domain marking
    /// loops pushed through the map and read in the codomain's marking
    /// coordinates, conjugated to the codomain basepoint.
    fn induced_outer(
        &self,
        codomain: &MarkedGraph,
        coords: &MarkingCoords,
    ) -> Result<FreeAutomorphism, DecomposeError> {
        let rho = coords.tree_path_to(codomain, self.img_v[self.dom.basepoint]);
        let rho_back: EdgePath = rho.iter().rev().map(|&h| partner(h)).collect();
        let rank = self.dom.rank();
        let mut images = Vec::with_capacity(rank);
        for m in self.dom.marking() {
            let mut loop_path = rho.clone();
            loop_path.extend(self.map_path(m));
            loop_path.extend_from_slice(&rho_back);
            tighten_path(&mut loop_path);
            images.push(coords.loop_to_reference(&loop_path));
        }
        Ok(FreeAutomorphism::new(rank, images)?)
    }
}

/// Decomposes a tightened homotopy equivalence into subdivisions followed by
/// elementary folds, one fold per stage (a simple fold sequence). The final
/// domain is isomorphic to the codomain; an identity map decomposes into the
/// empty sequence.
pub fn fold_decomposition(g: &GraphMap) -> Result<FoldSequence, DecomposeError> {
    let codomain = g.graph().clone();
    let mut dec = Decomposer {
        dom: g.graph().clone(),
        img_v: (0..codomain.n_vertices()).map(|v| g.vertex_image(v)).collect(),
        img_e: (0..codomain.n_edges()).map(|e| {
            let mut img = g.edge_image(e).clone();
            tighten_path(&mut img);
            img
        }).collect(),
    };
    for (e, img) in dec.img_e.iter().enumerate() {
        if img.is_empty() {
            return Err(DecomposeError::EmptyEdgeImage(e));
        }
    }
    let coords = MarkingCoords::new(&codomain)?;
    let reference = dec.induced_outer(&codomain, &coords)?;

    let mut seq = FoldSequence::new();

    // Stage 1: subdivide until every edge maps over a single half.
    loop {
        let target = (0..dec.dom.n_edges()).find(|&e| dec.img_e[e].len() > 1);
        let Some(e) = target else { break };
        let ratio = dec.subdivide(&codomain, e, 1);
        seq.push(FoldStep::Subdivide { edge: e, ratio }, dec.dom.clone());
    }

    // Stage 2: fold equal-image direction pairs until none remain.
    loop {
        let mut found = None;
        'scan: for v in 0..dec.dom.n_vertices {
            let halves = dec.dom.halves_at(v);
            for i in 0..halves.len() {
                for j in i + 1..halves.len() {
                    if dec.img_e[edge_of(halves[i])].len() == 1
                        && dec.half_image(halves[i]) == dec.half_image(halves[j])
                    {
                        found = Some((halves[i], halves[j]));
                        break 'scan;
                    }
                }
            }
        }
        let Some((h1, h2)) = found else { break };
        dec.fold(h1, h2)?;
        seq.push(FoldStep::Fold { d1: h1, d2: h2 }, dec.dom.clone());
        debug_assert!(dec
            .induced_outer(&codomain, &coords)?
            .equal_outer(&reference)?);
    }

    // Terminal stage must be a graph isomorphism onto the codomain.
    let iso = dec.dom.n_vertices() == codomain.n_vertices()
        && dec.dom.n_edges() == codomain.n_edges()
        && {
            let mut seen = vec![false; codomain.n_edges()];
            dec.img_e.iter().all(|img| {
                img.len() == 1 && !std::mem::replace(&mut seen[edge_of(img[0])], true)
            })
        };
    if !iso {
        return Err(DecomposeError::NotEquivalence);
    }
    let terminal = dec.induced_outer(&codomain, &coords)?;
    if !terminal.equal_outer(&reference)? {
        return Err(DecomposeError::NotEquivalence);
    }
    Ok(seq)
}
