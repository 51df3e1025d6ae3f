//! Projection to free factors: the factors a point exposes as proper
//! subgraphs.
//!
//! Every proper connected core subgraph carries a free factor, read in
//! the reference basis through the marking. Restricting to core
//! subgraphs (minimal valence two inside the subgraph) makes the listing
//! duplicate-free: a subgraph and any tree attached to it carry the same
//! factor, and distinct embedded cores carry distinct conjugacy classes.

use std::collections::{BTreeSet, VecDeque};

use crate::freegroup::Word;
use crate::graphmap::{forward, partner, tighten_path, HalfEdge, MarkedGraph};

use super::point::OuterSpacePoint;

/// A proper free factor, listed by one generating tuple. The tuple is
/// conjugation-normalized: no common conjugator prefix remains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeFactor {
    pub generators: Vec<Word>,
}

impl FreeFactor {
    pub fn rank(&self) -> usize {
        self.generators.len()
    }
}

/// Strips common conjugators: while every word is `x u x^-1` for one
/// letter `x`, replace each by its interior.
fn strip_common_conjugator(words: &mut [Word]) {
    loop {
        let Some(&x) = words.first().and_then(|w| w.letters().first()) else { return };
        let strippable = words.iter().all(|w| {
            let l = w.letters();
            l.len() >= 2 && l[0] == x && *l.last().unwrap() == -x
        });
        if !strippable {
            return;
        }
        for w in words.iter_mut() {
            let inner = w.letters()[1..w.len() - 1].to_vec();
            *w = Word::from_reduced(inner).expect("interior of a reduced word");
        }
    }
}

/// Vertices incident to an edge subset.
fn incident_vertices(g: &MarkedGraph, edges: &[usize]) -> BTreeSet<usize> {
    let mut verts = BTreeSet::new();
    for &e in edges {
        verts.insert(g.origin(forward(e)));
        verts.insert(g.terminus(forward(e)));
    }
    verts
}

fn is_connected_core(g: &MarkedGraph, edges: &[usize]) -> bool {
    let verts = incident_vertices(g, edges);
    // Core: every incident vertex meets at least two subgraph half-edges.
    for &v in &verts {
        let degree = edges
            .iter()
            .map(|&e| {
                usize::from(g.origin(forward(e)) == v) + usize::from(g.terminus(forward(e)) == v)
            })
            .sum::<usize>();
        if degree < 2 {
            return false;
        }
    }
    // Connectivity by BFS over the subgraph.
    let start = *verts.first().expect("nonempty edge set");
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &e in edges {
            let (a, b) = (g.origin(forward(e)), g.terminus(forward(e)));
            for (x, y) in [(a, b), (b, a)] {
                if x == v && seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
    }
    seen.len() == verts.len()
}

/// Generators of the factor carried by a connected subgraph: non-tree
/// loops of a subgraph spanning tree, conjugated to the basepoint and
/// read in the reference basis.
fn subgraph_factor(point: &OuterSpacePoint, edges: &[usize]) -> Vec<Word> {
    let g = point.graph();
    let verts = incident_vertices(g, edges);
    let root = *verts.first().expect("nonempty edge set");
    let gamma = point.coords().tree_path_to(g, root);
    let gamma_back: Vec<HalfEdge> = gamma.iter().rev().map(|&h| partner(h)).collect();

    let mut tree_parent: Vec<Option<HalfEdge>> = vec![None; g.n_vertices()];
    let mut seen = BTreeSet::from([root]);
    let mut tree_edges = BTreeSet::new();
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &e in edges {
            if tree_edges.contains(&e) {
                continue;
            }
            let (a, b) = (g.origin(forward(e)), g.terminus(forward(e)));
            let next = if a == v && !seen.contains(&b) {
                Some((b, forward(e)))
            } else if b == v && !seen.contains(&a) {
                Some((a, partner(forward(e))))
            } else {
                None
            };
            if let Some((w, h)) = next {
                seen.insert(w);
                tree_parent[w] = Some(h);
                tree_edges.insert(e);
                queue.push_back(w);
            }
        }
    }
    let path_from_root = |mut v: usize| {
        let mut back = Vec::new();
        while let Some(h) = tree_parent[v] {
            back.push(h);
            v = g.origin(h);
        }
        back.reverse();
        back
    };
    let mut words = Vec::new();
    for &e in edges {
        if tree_edges.contains(&e) {
            continue;
        }
        let mut loop_path = gamma.clone();
        loop_path.extend(path_from_root(g.origin(forward(e))));
        loop_path.push(forward(e));
        loop_path.extend(path_from_root(g.terminus(forward(e))).iter().rev().map(|&h| partner(h)));
        loop_path.extend_from_slice(&gamma_back);
        tighten_path(&mut loop_path);
        words.push(point.coords().loop_to_reference(&loop_path));
    }
    strip_common_conjugator(&mut words);
    words
}

/// All free factors arising from proper connected core subgraphs, sorted
/// by rank and then by generator letters.
pub fn free_factor_projection(point: &OuterSpacePoint) -> Vec<FreeFactor> {
    let g = point.graph();
    let n = g.n_edges();
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << n) - 1 {
        let edges: Vec<usize> = (0..n).filter(|&e| mask >> e & 1 == 1).collect();
        if !is_connected_core(g, &edges) {
            continue;
        }
        out.push(FreeFactor { generators: subgraph_factor(point, &edges) });
    }
    // Order letters as a < A < b < B so listings read alphabetically.
    fn key(f: &FreeFactor) -> Vec<Vec<(u32, bool)>> {
        f.generators
            .iter()
            .map(|w| w.letters().iter().map(|&l| (l.unsigned_abs(), l < 0)).collect())
            .collect()
    }
    out.sort_by(|a, b| (a.rank(), key(a)).cmp(&(b.rank(), key(b))));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outerspace::point::normalize_volume;

    fn texts(factors: &[FreeFactor]) -> Vec<Vec<String>> {
        factors
            .iter()
            .map(|f| f.generators.iter().map(|w| w.to_text().unwrap()).collect())
            .collect()
    }

    #[test]
    fn rose_factors_are_the_generator_subsets() {
        let p = OuterSpacePoint::new(MarkedGraph::rose(3)).unwrap();
        let got = texts(&free_factor_projection(&p));
        let want: Vec<Vec<String>> = [
            vec!["a"],
            vec!["b"],
            vec!["c"],
            vec!["a", "b"],
            vec!["a", "c"],
            vec!["b", "c"],
        ]
        .map(|v| v.into_iter().map(String::from).collect())
        .to_vec();
        assert_eq!(got, want);
    }

    #[test]
    fn rank_two_rose_has_only_the_two_petal_factors() {
        let p = OuterSpacePoint::new(MarkedGraph::rose(2)).unwrap();
        assert_eq!(texts(&free_factor_projection(&p)), [["a"], ["b"]]);
    }

    #[test]
    fn theta_graph_exposes_its_three_circles() {
        let third = 1.0 / 3.0;
        let g = MarkedGraph::new(
            2,
            &[(0, 1), (0, 1), (0, 1)],
            &[third, third, third],
            0,
            vec![vec![0, 3], vec![2, 5]],
            None,
        )
        .unwrap();
        let p = normalize_volume(&g).unwrap();
        let factors = free_factor_projection(&p);
        assert!(factors.iter().all(|f| f.rank() == 1));
        assert_eq!(texts(&factors), [["A"], ["B"], ["BA"]]);
    }

    #[test]
    fn barbell_factors_are_conjugation_normalized() {
        let g = MarkedGraph::new(
            2,
            &[(0, 0), (1, 1), (0, 1)],
            &[0.4, 0.4, 0.2],
            0,
            vec![vec![0], vec![4, 2, 5]],
            None,
        )
        .unwrap();
        let p = OuterSpacePoint::new(g).unwrap();
        // The far loop's raw generator is c b C; the normal form strips
        // the conjugator.
        assert_eq!(texts(&free_factor_projection(&p)), [["a"], ["b"]]);
    }
}
