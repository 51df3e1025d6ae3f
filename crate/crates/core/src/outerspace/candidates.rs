//! Candidate loops: the finite family realizing the maximal stretch.
//!
//! The optimal Lipschitz constant between two points is attained on a
//! loop whose image in the graph is an embedded circle, a figure eight
//! (two circles wedged at one vertex), or a barbell (two disjoint
//! circles joined by an embedded arc). Every candidate crosses each edge
//! at most twice, so the family is finite and the distance computation
//! reduces to a maximum over it.

use std::collections::BTreeSet;

use crate::graphmap::{edge_of, partner, EdgePath, HalfEdge, MarkedGraph};

use super::point::OuterSpacePoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateShape {
    EmbeddedCircle,
    FigureEight,
    Barbell,
}

/// A reduced closed edge path of one of the three candidate shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateLoop {
    pub path: EdgePath,
    pub shape: CandidateShape,
}

fn reverse_path(path: &[HalfEdge]) -> EdgePath {
    path.iter().rev().map(|&h| partner(h)).collect()
}

fn circle_vertices(g: &MarkedGraph, circle: &[HalfEdge]) -> BTreeSet<usize> {
    circle.iter().map(|&h| g.origin(h)).collect()
}

/// Rebases a circle to start at one of its vertices.
fn rotate_to(g: &MarkedGraph, circle: &[HalfEdge], x: usize) -> EdgePath {
    let k = circle
        .iter()
        .position(|&h| g.origin(h) == x)
        .expect("rotation vertex lies on the circle");
    circle[k..].iter().chain(&circle[..k]).copied().collect()
}

/// All embedded circles, each as a closed path based at its smallest
/// vertex, deduplicated across orientation and basepoint by edge set.
fn embedded_circles(g: &MarkedGraph) -> Vec<EdgePath> {
    fn extend(
        g: &MarkedGraph,
        base: usize,
        cur: usize,
        path: &mut EdgePath,
        used: &mut BTreeSet<usize>,
        visited: &mut BTreeSet<usize>,
        seen: &mut BTreeSet<BTreeSet<usize>>,
        out: &mut Vec<EdgePath>,
    ) {
        for h in g.halves_at(cur) {
            let e = edge_of(h);
            if used.contains(&e) {
                continue;
            }
            let t = g.terminus(h);
            if t == base {
                path.push(h);
                if seen.insert(used.iter().copied().chain([e]).collect()) {
                    out.push(path.clone());
                }
                path.pop();
            } else if t > base && !visited.contains(&t) {
                path.push(h);
                used.insert(e);
                visited.insert(t);
                extend(g, base, t, path, used, visited, seen, out);
                visited.remove(&t);
                used.remove(&e);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for base in 0..g.n_vertices() {
        let mut path = Vec::new();
        let mut used = BTreeSet::new();
        let mut visited = BTreeSet::new();
        extend(g, base, base, &mut path, &mut used, &mut visited, &mut seen, &mut out);
    }
    out
}

/// Embedded arcs from a vertex of `from` to the first contact with `to`,
/// interior vertices disjoint from both circles.
fn connecting_arcs(
    g: &MarkedGraph,
    from: &BTreeSet<usize>,
    to: &BTreeSet<usize>,
) -> Vec<EdgePath> {
    fn extend(
        g: &MarkedGraph,
        from: &BTreeSet<usize>,
        to: &BTreeSet<usize>,
        cur: usize,
        path: &mut EdgePath,
        visited: &mut BTreeSet<usize>,
        out: &mut Vec<EdgePath>,
    ) {
        for h in g.halves_at(cur) {
            let t = g.terminus(h);
            if to.contains(&t) {
                path.push(h);
                out.push(path.clone());
                path.pop();
            } else if !from.contains(&t) && !visited.contains(&t) {
                path.push(h);
                visited.insert(t);
                extend(g, from, to, t, path, visited, out);
                visited.remove(&t);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    for &u in from {
        let mut path = Vec::new();
        let mut visited = BTreeSet::from([u]);
        extend(g, from, to, u, &mut path, &mut visited, &mut out);
    }
    out
}

/// Enumerates every candidate loop of a point.
pub fn candidates(point: &OuterSpacePoint) -> Vec<CandidateLoop> {
    let g = point.graph();
    let circles = embedded_circles(g);
    let verts: Vec<BTreeSet<usize>> =
        circles.iter().map(|c| circle_vertices(g, c)).collect();

    let mut out: Vec<CandidateLoop> = circles
        .iter()
        .map(|c| CandidateLoop { path: c.clone(), shape: CandidateShape::EmbeddedCircle })
        .collect();

    for i in 0..circles.len() {
        for j in i + 1..circles.len() {
            let shared: Vec<usize> = verts[i].intersection(&verts[j]).copied().collect();
            if shared.len() == 1 {
                let x = shared[0];
                let a = rotate_to(g, &circles[i], x);
                let b = rotate_to(g, &circles[j], x);
                debug_assert!(circles[i]
                    .iter()
                    .all(|&h| !circles[j].iter().any(|&k| edge_of(h) == edge_of(k))));
                let mut eight = a.clone();
                eight.extend(&b);
                out.push(CandidateLoop { path: eight, shape: CandidateShape::FigureEight });
                let mut eight = a;
                eight.extend(reverse_path(&b));
                out.push(CandidateLoop { path: eight, shape: CandidateShape::FigureEight });
            } else if shared.is_empty() {
                for arc in connecting_arcs(g, &verts[i], &verts[j]) {
                    let u = g.origin(arc[0]);
                    let w = g.terminus(*arc.last().unwrap());
                    let a = rotate_to(g, &circles[i], u);
                    let b = rotate_to(g, &circles[j], w);
                    let back = reverse_path(&arc);
                    for second in [b.clone(), reverse_path(&b)] {
                        let mut bar = a.clone();
                        bar.extend(&arc);
                        bar.extend(second);
                        bar.extend(&back);
                        out.push(CandidateLoop { path: bar, shape: CandidateShape::Barbell });
                    }
                }
            }
        }
    }
    out
}
