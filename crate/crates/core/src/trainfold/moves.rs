//! In-place structural moves on marked graph self-maps.
//!
//! Every move preserves the outer class of the induced automorphism: each is a
//! homotopy equivalence of the underlying graph together with the compatible
//! rewrite of the map and the marking. Callers sequence these into fold
//! decompositions and train track searches.
//!
//! Moves mutate all three layers at once: graph structure (vertices, edges,
//! lengths), the self-map (vertex and edge images), and the marking loops.
//! Occurrence rewriting is global: when an edge is split, merged, or removed,
//! every stored path is updated in the same pass.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::graphmap::{
    edge_of, forward, is_forward, partner, tighten_path, EdgePath, GraphMap, HalfEdge,
};

/// Why an elementary fold could not be performed.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FoldError {
    /// The two directions are the same direction.
    #[error("cannot fold a direction with itself")]
    SameDirection,
    /// The two directions are based at different vertices.
    #[error("directions originate at different vertices")]
    DifferentVertex,
    /// One of the directions has an empty image path.
    #[error("direction has empty image")]
    EmptyImage,
    /// The direction images disagree, so no initial segments can be folded.
    #[error("direction images differ; nothing to fold")]
    NotFoldable,
}

/// What an elementary fold did to the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FoldReport {
    /// True when the fold identified two edges with the same endpoints,
    /// dropping the first betti number. A fold inside a homotopy equivalence
    /// pipeline must never set this.
    pub rank_dropped: bool,
    /// Number of edge subdivisions performed to isolate the folded segments.
    pub subdivisions: usize,
    /// Surviving edge that carries the folded segment.
    pub merged_edge: usize,
}

/// Sentinel half-edge values used mid-rewrite, outside any valid range.
const TEMP_FWD: HalfEdge = usize::MAX - 1;
const TEMP_BWD: HalfEdge = usize::MAX;

fn rewrite_paths(map: &mut GraphMap, f: &mut dyn FnMut(&mut EdgePath)) {
    for img in &mut map.edge_images {
        f(img);
    }
    for m in &mut map.graph.marking {
        f(m);
    }
}

/// Replaces every traversal of edge `e` by the path `fwd` (and reversed
/// traversals by the reverse path) in all stored paths.
fn splice_edge(map: &mut GraphMap, e: usize, fwd: &[HalfEdge]) {
    let bwd: Vec<HalfEdge> = fwd.iter().rev().map(|&h| partner(h)).collect();
    let he_fwd = forward(e);
    let he_bwd = partner(he_fwd);
    rewrite_paths(map, &mut |p: &mut EdgePath| {
        if !p.iter().any(|&h| edge_of(h) == e) {
            return;
        }
        let mut out = Vec::with_capacity(p.len() + fwd.len());
        for &h in p.iter() {
            if h == he_fwd {
                out.extend_from_slice(fwd);
            } else if h == he_bwd {
                out.extend_from_slice(&bwd);
            } else {
                out.push(h);
            }
        }
        *p = out;
    });
}

/// Tightens every edge image and marking loop. Edge images are allowed to
/// become empty here; cleanup passes collapse such edges afterwards.
pub(crate) fn tighten_all_paths(map: &mut GraphMap) {
    rewrite_paths(map, &mut |p: &mut EdgePath| tighten_path(p));
}

/// Picks an edge name not yet in use, derived from `base` by appending a
/// numeric suffix.
fn fresh_edge_name(names: &[String], base: &str) -> String {
    let taken: BTreeSet<&str> = names.iter().map(|s| s.as_str()).collect();
    for i in 1.. {
        let cand = format!("{base}{i}");
        if !taken.contains(cand.as_str()) {
            return cand;
        }
    }
    unreachable!()
}

/// Subdivides edge `e` at the point whose image is the break after the first
/// `k` halves of the image path. Requires `1 <= k < |image|`.
///
/// The front piece keeps slot `e` and its forward orientation; the back piece
/// becomes a new edge whose index is returned. Metric lengths split in
/// proportion to the image lengths, so on an eigenmetric graph the break sits
/// at the exact preimage of the image vertex. All stored paths are rewritten
/// to cross both pieces.
pub fn subdivide(map: &mut GraphMap, e: usize, k: usize) -> usize {
    let img = map.edge_images[e].clone();
    let m = img.len();
    assert!(k >= 1 && k < m, "subdivision break must be interior");

    let front: f64 = img[..k].iter().map(|&h| map.graph.lengths[edge_of(h)]).sum();
    let back: f64 = img[k..].iter().map(|&h| map.graph.lengths[edge_of(h)]).sum();
    let ratio = if front + back > 0.0 { front / (front + back) } else { 0.5 };

    // Image of the new vertex, read off before any structure changes.
    let w_image = map.graph.origin[partner(img[k - 1])];

    let w = map.graph.n_vertices;
    map.graph.n_vertices += 1;
    let n = map.graph.n_edges();
    let old_terminus = map.graph.origin[partner(forward(e))];

    map.graph.origin[partner(forward(e))] = w;
    map.graph.origin.push(w);
    map.graph.origin.push(old_terminus);

    let l = map.graph.lengths[e];
    map.graph.lengths[e] = l * ratio;
    map.graph.lengths.push(l * (1.0 - ratio));

    let name = fresh_edge_name(&map.graph.edge_names, &map.graph.edge_names[e].clone());
    map.graph.edge_names.push(name);

    map.vertex_images.push(w_image);
    map.edge_images[e] = img[..k].to_vec();
    map.edge_images.push(img[k..].to_vec());

    // Old traversals of e now cross both pieces.
    splice_edge(map, e, &[forward(e), forward(n)]);
    n
}

/// Removes edge `b` from all arrays, shifting higher edge indices down.
/// Stored paths must no longer traverse `b`.
fn remove_edge(map: &mut GraphMap, b: usize) {
    let hb = forward(b);
    map.graph.origin.drain(hb..hb + 2);
    map.graph.lengths.remove(b);
    map.graph.edge_names.remove(b);
    map.edge_images.remove(b);
    rewrite_paths(map, &mut |p: &mut EdgePath| {
        for h in p.iter_mut() {
            debug_assert!(edge_of(*h) != b, "removed edge still traversed");
            if *h > hb + 1 && *h < TEMP_FWD {
                *h -= 2;
            }
        }
    });
}

/// Merges vertex `drop` into vertex `keep` and compacts vertex numbering.
fn merge_vertices(map: &mut GraphMap, keep: usize, drop: usize) {
    assert_ne!(keep, drop);
    let remap = |v: usize| {
        let v = if v == drop { keep } else { v };
        v - usize::from(v > drop)
    };
    for v in map.graph.origin.iter_mut() {
        *v = remap(*v);
    }
    map.graph.basepoint = remap(map.graph.basepoint);
    map.vertex_images.remove(drop);
    for v in map.vertex_images.iter_mut() {
        *v = remap(*v);
    }
    map.graph.n_vertices -= 1;
}

/// Collapses each edge in `edges` to a point. The set must span a subforest:
/// a cycle inside it would change the homotopy type and is rejected.
///
/// Valid when the collapsed edges all map into point images or when the
/// caller collapses an invariant subforest; occurrences of collapsed edges
/// are simply deleted from every stored path.
pub fn collapse_edges(map: &mut GraphMap, edges: &BTreeSet<usize>) {
    if edges.is_empty() {
        return;
    }
    let n_v = map.graph.n_vertices;
    let mut parent: Vec<usize> = (0..n_v).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &e in edges {
        let a = find(&mut parent, map.graph.origin[forward(e)]);
        let b = find(&mut parent, map.graph.origin[partner(forward(e))]);
        assert!(a != b, "collapse set contains a cycle");
        let (lo, hi) = (a.min(b), a.max(b));
        parent[hi] = lo;
    }

    // New vertex numbering: class representatives in ascending order.
    let mut new_v = vec![usize::MAX; n_v];
    let mut next = 0usize;
    for v in 0..n_v {
        if find(&mut parent, v) == v {
            new_v[v] = next;
            next += 1;
        }
    }
    let class = |parent: &mut Vec<usize>, v: usize| -> usize { new_v[find(parent, v)] };

    // New edge numbering for survivors.
    let n_e = map.graph.n_edges();
    let mut new_e = vec![usize::MAX; n_e];
    let mut kept = 0usize;
    for e in 0..n_e {
        if !edges.contains(&e) {
            new_e[e] = kept;
            kept += 1;
        }
    }

    rewrite_paths(map, &mut |p: &mut EdgePath| {
        let mut out = Vec::with_capacity(p.len());
        for &h in p.iter() {
            let e = edge_of(h);
            if !edges.contains(&e) {
                out.push(forward(new_e[e]) | (h & 1));
            }
        }
        tighten_path(&mut out);
        *p = out;
    });

    let mut origin = Vec::with_capacity(2 * kept);
    let mut lengths = Vec::with_capacity(kept);
    let mut names = Vec::with_capacity(kept);
    let mut images = Vec::with_capacity(kept);
    for e in 0..n_e {
        if edges.contains(&e) {
            continue;
        }
        origin.push(class(&mut parent, map.graph.origin[forward(e)]));
        origin.push(class(&mut parent, map.graph.origin[partner(forward(e))]));
        lengths.push(map.graph.lengths[e]);
        names.push(map.graph.edge_names[e].clone());
        images.push(std::mem::take(&mut map.edge_images[e]));
    }

    let mut vertex_images = vec![usize::MAX; next];
    for v in 0..n_v {
        let target = class(&mut parent, map.vertex_images[v]);
        let slot = class(&mut parent, v);
        if vertex_images[slot] == usize::MAX {
            vertex_images[slot] = target;
        } else {
            debug_assert_eq!(
                vertex_images[slot], target,
                "collapsed class has inconsistent vertex images"
            );
        }
    }

    map.graph.basepoint = class(&mut parent, map.graph.basepoint);
    map.graph.n_vertices = next;
    map.graph.origin = origin;
    map.graph.lengths = lengths;
    map.graph.edge_names = names;
    map.edge_images = images;
    map.vertex_images = vertex_images;
}

/// Moves the basepoint to `new_bp`, conjugating the marking by `conn`, a path
/// from `new_bp` to the old basepoint.
pub fn move_basepoint(map: &mut GraphMap, new_bp: usize, conn: &[HalfEdge]) {
    if !conn.is_empty() {
        debug_assert_eq!(map.graph.origin[conn[0]], new_bp);
        debug_assert_eq!(map.graph.origin[partner(conn[conn.len() - 1])], map.graph.basepoint);
    } else {
        debug_assert_eq!(new_bp, map.graph.basepoint);
    }
    let back: EdgePath = conn.iter().rev().map(|&h| partner(h)).collect();
    for m in &mut map.graph.marking {
        let mut loop_path = conn.to_vec();
        loop_path.extend_from_slice(m);
        loop_path.extend_from_slice(&back);
        tighten_path(&mut loop_path);
        *m = loop_path;
    }
    map.graph.basepoint = new_bp;
}

/// Removes one valence-one vertex if any exists (keeping the basepoint's
/// vertex alive is not required: the incident edge is collapsed, which
/// retracts the spur and keeps the marking based). Returns whether a removal
/// happened.
pub fn remove_valence_one_step(map: &mut GraphMap) -> bool {
    if map.graph.n_vertices <= 1 {
        return false;
    }
    let valences = map.graph.valences();
    for v in 0..map.graph.n_vertices {
        if valences[v] == 1 {
            let h = *map
                .graph
                .halves_at(v)
                .first()
                .expect("valence-one vertex has an incident half");
            let mut set = BTreeSet::new();
            set.insert(edge_of(h));
            collapse_edges(map, &set);
            return true;
        }
    }
    false
}

/// Removes one valence-two vertex if any exists, merging its two incident
/// edges into a single edge. Returns whether a removal happened.
///
/// Loops at the vertex (valence two via both halves of one edge) are not
/// removable this way and are skipped.
pub fn remove_valence_two_step(map: &mut GraphMap) -> bool {
    let valences = map.graph.valences();
    'vertices: for v in 0..map.graph.n_vertices {
        if valences[v] != 2 {
            continue;
        }
        let halves: Vec<HalfEdge> = map.graph.halves_at(v);
        debug_assert_eq!(halves.len(), 2);
        let (h1, h2) = (halves[0], halves[1]);
        if edge_of(h1) == edge_of(h2) {
            continue 'vertices;
        }
        remove_valence_two_at(map, v, h1, h2);
        return true;
    }
    false
}

/// Core of valence-two removal: erase vertex `v` whose two outgoing halves
/// are `h1` and `h2` on distinct edges. The merged edge runs from the far end
/// of `h1` to the far end of `h2`, reusing `h1`'s edge slot.
fn remove_valence_two_at(map: &mut GraphMap, v: usize, h1: HalfEdge, h2: HalfEdge) {
    let e1 = edge_of(h1);
    let e2 = edge_of(h2);
    let u = map.graph.origin[partner(h1)];
    let x = map.graph.origin[partner(h2)];

    // The basepoint may not sit on the erased vertex: slide it off first.
    if map.graph.basepoint == v {
        move_basepoint(map, x, &[partner(h2)]);
    }

    // No vertex may map onto the erased vertex: push such images off along h2.
    let pushed: Vec<usize> = (0..map.graph.n_vertices)
        .filter(|&z| map.vertex_images[z] == v)
        .collect();
    if !pushed.is_empty() {
        let n_e = map.graph.n_edges();
        for f in 0..n_e {
            if pushed.contains(&map.graph.origin[forward(f)]) {
                map.edge_images[f].insert(0, partner(h2));
            }
            if pushed.contains(&map.graph.origin[partner(forward(f))]) {
                map.edge_images[f].push(h2);
            }
        }
        for &z in &pushed {
            map.vertex_images[z] = x;
        }
        tighten_all_paths(map);
    }

    // Every surviving traversal of v is a full transit; rewrite each pair to
    // a sentinel for the merged edge.
    let p1 = partner(h1);
    let p2 = partner(h2);
    rewrite_paths(map, &mut |p: &mut EdgePath| {
        let mut out = Vec::with_capacity(p.len());
        let mut i = 0;
        while i < p.len() {
            if i + 1 < p.len() && p[i] == p1 && p[i + 1] == h2 {
                out.push(TEMP_FWD);
                i += 2;
            } else if i + 1 < p.len() && p[i] == p2 && p[i + 1] == h1 {
                out.push(TEMP_BWD);
                i += 2;
            } else {
                debug_assert!(
                    ![h1, h2, p1, p2].contains(&p[i]),
                    "unpaired traversal of a valence-two vertex"
                );
                out.push(p[i]);
                i += 1;
            }
        }
        *p = out;
    });

    // Image of the merged edge, still in current halves, then through the
    // same transit rewrite.
    let mut merged_img: EdgePath = map
        .half_image(p1)
        .into_iter()
        .chain(map.half_image(h2))
        .collect();
    tighten_path(&mut merged_img);
    {
        let mut out = Vec::with_capacity(merged_img.len());
        let mut i = 0;
        while i < merged_img.len() {
            if i + 1 < merged_img.len() && merged_img[i] == p1 && merged_img[i + 1] == h2 {
                out.push(TEMP_FWD);
                i += 2;
            } else if i + 1 < merged_img.len() && merged_img[i] == p2 && merged_img[i + 1] == h1 {
                out.push(TEMP_BWD);
                i += 2;
            } else {
                out.push(merged_img[i]);
                i += 1;
            }
        }
        merged_img = out;
    }
    map.edge_images[e1] = merged_img;

    // Restructure: e1 becomes the merged edge u -> x.
    map.graph.origin[forward(e1)] = u;
    map.graph.origin[partner(forward(e1))] = x;
    map.graph.lengths[e1] += map.graph.lengths[e2];

    remove_edge(map, e2);
    let e1_new = e1 - usize::from(e1 > e2);

    // Resolve sentinels now that edge numbering is final.
    let fwd = forward(e1_new);
    rewrite_paths(map, &mut |p: &mut EdgePath| {
        for h in p.iter_mut() {
            if *h == TEMP_FWD {
                *h = fwd;
            } else if *h == TEMP_BWD {
                *h = partner(fwd);
            }
        }
    });

    // Erase the vertex itself.
    let renumber = |z: usize| z - usize::from(z > v);
    debug_assert!(map.graph.origin.iter().all(|&z| z != v));
    for z in map.graph.origin.iter_mut() {
        *z = renumber(*z);
    }
    map.graph.basepoint = renumber(map.graph.basepoint);
    debug_assert!(map.vertex_images.iter().all(|&z| z != v));
    map.vertex_images.remove(v);
    for z in map.vertex_images.iter_mut() {
        *z = renumber(*z);
    }
    map.graph.n_vertices -= 1;

    tighten_all_paths(map);
}

/// Returns a direction at the same vertex as `d` whose edge image is exactly
/// the first `p` halves of `d`'s half image, subdividing `d`'s edge when the
/// image is longer. Returns the direction and whether a subdivision happened.
fn isolate_prefix(map: &mut GraphMap, d: HalfEdge, p: usize) -> (HalfEdge, bool) {
    let e = edge_of(d);
    let m = map.edge_images[e].len();
    debug_assert!(p >= 1 && p <= m);
    if p == m {
        return (d, false);
    }
    if is_forward(d) {
        subdivide(map, e, p);
        (d, true)
    } else {
        let n = subdivide(map, e, m - p);
        (partner(forward(n)), true)
    }
}

/// Folds the maximal initial segments of the two directions' images.
///
/// Both directions must originate at one vertex and have the same direction
/// image. Each side is subdivided so an entire edge carries the common image
/// prefix, then the two carrier edges are identified. The fold is a homotopy
/// equivalence precisely when the carriers have distinct far endpoints;
/// otherwise `rank_dropped` is set and the caller must treat the result as a
/// quotient, not an equivalence.
pub fn elementary_fold(map: &mut GraphMap, d1: HalfEdge, d2: HalfEdge) -> Result<FoldReport, FoldError> {
    if d1 == d2 {
        return Err(FoldError::SameDirection);
    }
    if map.graph.origin[d1] != map.graph.origin[d2] {
        return Err(FoldError::DifferentVertex);
    }
    let img1 = map.half_image(d1);
    let img2 = map.half_image(d2);
    if img1.is_empty() || img2.is_empty() {
        return Err(FoldError::EmptyImage);
    }
    if img1[0] != img2[0] {
        return Err(FoldError::NotFoldable);
    }
    let p = img1
        .iter()
        .zip(img2.iter())
        .take_while(|(a, b)| a == b)
        .count();

    let mut subdivisions = 0usize;
    let e1 = edge_of(d1);
    let e2 = edge_of(d2);

    let (a1, sub1) = isolate_prefix(map, d1, p);
    subdivisions += usize::from(sub1);

    // A loop edge supplies both directions; the first subdivision reroutes
    // the second direction onto the new back piece.
    let mut d2_cur = d2;
    if sub1 && e1 == e2 {
        let n = map.graph.n_edges() - 1;
        if is_forward(d1) {
            // d2 was the reverse germ 2e+1; the back piece now carries it.
            debug_assert_eq!(d2, partner(forward(e1)));
            d2_cur = partner(forward(n));
        } else {
            // d2 was the forward germ 2e; slot e1 kept the front piece.
            debug_assert_eq!(d2, forward(e1));
        }
    }

    // The subdivision may have split edges crossed by the common prefix, so
    // the prefix length in current halves is re-read from the first carrier
    // rather than reusing `p`.
    let prefix = map.half_image(a1);
    let p2 = prefix.len();
    debug_assert!(map.half_image(d2_cur).starts_with(&prefix));

    let (a2, sub2) = isolate_prefix(map, d2_cur, p2);
    subdivisions += usize::from(sub2);

    let ea = edge_of(a1);
    let eb = edge_of(a2);
    debug_assert_ne!(ea, eb, "fold carriers must be distinct edges");
    debug_assert_eq!(map.half_image(a1), map.half_image(a2));

    let w1 = map.graph.origin[partner(a1)];
    let w2 = map.graph.origin[partner(a2)];
    let rank_dropped = w1 == w2;

    // Identify a2's edge with a1's edge, matching orientations.
    let (ra1, ra2) = (partner(a1), partner(a2));
    rewrite_paths(map, &mut |path: &mut EdgePath| {
        for h in path.iter_mut() {
            if *h == a2 {
                *h = a1;
            } else if *h == ra2 {
                *h = ra1;
            }
        }
    });

    map.graph.lengths[ea] = (map.graph.lengths[ea] + map.graph.lengths[eb]) / 2.0;

    debug_assert_eq!(map.vertex_images[w1], map.vertex_images[w2]);
    remove_edge(map, eb);
    let merged_edge = ea - usize::from(ea > eb);
    if !rank_dropped {
        merge_vertices(map, w1.min(w2), w1.max(w2));
    }

    tighten_all_paths(map);
    Ok(FoldReport {
        rank_dropped,
        subdivisions,
        merged_edge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freegroup::FreeAutomorphism;
    use crate::graphmap::MarkedGraph;

    fn rose_map(images: &[&str]) -> GraphMap {
        let phi = FreeAutomorphism::from_strings(images.len(), images, false).unwrap();
        GraphMap::rose_map(&phi)
    }

    fn outer_equal(a: &FreeAutomorphism, b: &FreeAutomorphism) -> bool {
        a.equal_outer(b).unwrap()
    }

    #[test]
    fn subdivide_splits_image_and_rewrites_occurrences() {
        // a -> ab, b -> a on the rose.
        let mut map = rose_map(&["ab", "a"]);
        let n = subdivide(&mut map, 0, 1);
        assert_eq!(n, 2);
        assert_eq!(map.graph.n_vertices, 2);
        assert_eq!(map.graph.n_edges(), 3);
        // Front piece a: image a (old half 0 -> [0, 4] after rewrite; image
        // was [0] before the split so front keeps [0, 4]'s first part).
        // Old image of a was [0, 2]: split at k=1 gives front [0], back [2],
        // then the global rewrite maps 0 -> [0, 4].
        assert_eq!(map.edge_images[0], vec![0, 4]);
        assert_eq!(map.edge_images[2], vec![2]);
        // b's image [0] becomes [0, 4].
        assert_eq!(map.edge_images[1], vec![0, 4]);
        // New vertex maps to the break point's image: terminus of old half 0
        // (the a-loop) is the basepoint.
        assert_eq!(map.vertex_images[1], 0);
        // Marking for a crosses both pieces now.
        assert_eq!(map.graph.marking[0], vec![0, 4]);
        assert!(map.validate().is_ok());
        assert!(map.graph.validate().is_ok());
    }

    #[test]
    fn subdivide_metric_is_proportional() {
        let mut map = rose_map(&["ab", "a"]);
        // Lengths 1/2, 1/2; image of a is ab with metric length 1.
        subdivide(&mut map, 0, 1);
        assert!((map.graph.lengths[0] - 0.25).abs() < 1e-12);
        assert!((map.graph.lengths[2] - 0.25).abs() < 1e-12);
        assert!((map.graph.lengths[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn subdivide_then_remove_valence_two_round_trips() {
        let mut map = rose_map(&["ab", "a"]);
        let reference = rose_map(&["ab", "a"]);
        subdivide(&mut map, 0, 1);
        assert!(remove_valence_two_step(&mut map));
        assert_eq!(map.graph.n_vertices, 1);
        assert_eq!(map.graph.n_edges(), 2);
        assert_eq!(map.edge_images, reference.edge_images);
        assert_eq!(map.graph.marking, reference.graph.marking);
        assert!(map.validate().is_ok());
        let before = reference.induced_automorphism().unwrap();
        let after = map.induced_automorphism().unwrap();
        assert!(outer_equal(&before, &after));
    }

    #[test]
    fn collapse_rejects_cycle() {
        let map = rose_map(&["ab", "a"]);
        let mut map = map;
        let mut set = BTreeSet::new();
        set.insert(0usize);
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
            collapse_edges(&mut map, &set);
        }));
        assert!(result.is_err());
    }

    #[test]
    fn collapse_tree_edge_in_theta() {
        // Theta graph: vertices 0, 1; edges a, b, c all from 0 to 1.
        // Marking over F_2: loops a b-bar, b c-bar... use the wire format.
        let json = r#"{
            "vertices": 2,
            "edges": [
                {"id": "a", "from": 0, "to": 1},
                {"id": "b", "from": 0, "to": 1},
                {"id": "c", "from": 0, "to": 1}
            ],
            "basepoint": 0,
            "marking": ["a B", "b C"]
        }"#;
        let graph = MarkedGraph::from_json(json).unwrap();
        // Identity map on the theta graph.
        let map = GraphMap::new(
            graph,
            vec![0, 1],
            vec![vec![0], vec![2], vec![4]],
        )
        .unwrap();
        let before = map.induced_automorphism().unwrap();
        let mut map = map;
        let mut set = BTreeSet::new();
        set.insert(2usize); // collapse c
        collapse_edges(&mut map, &set);
        assert_eq!(map.graph.n_vertices, 1);
        assert_eq!(map.graph.n_edges(), 2);
        assert!(map.validate().is_ok());
        assert!(map.graph.validate().is_ok());
        let after = map.induced_automorphism().unwrap();
        assert!(outer_equal(&before, &after));
    }

    #[test]
    fn valence_one_spur_is_retracted() {
        // Rose with an extra spur edge s from basepoint to a new vertex.
        let json = r#"{
            "vertices": 2,
            "edges": [
                {"id": "a", "from": 0, "to": 0},
                {"id": "b", "from": 0, "to": 0},
                {"id": "s", "from": 0, "to": 1}
            ],
            "basepoint": 0,
            "marking": ["a", "b"]
        }"#;
        let graph = MarkedGraph::from_json(json).unwrap();
        // Map: a -> a s s-bar b (homotopic to ab), b -> a, spur s -> point.
        let map = GraphMap::new(
            graph,
            vec![0, 0],
            vec![vec![0, 4, 5, 2], vec![0], vec![]],
        )
        .unwrap();
        let before = map.induced_automorphism().unwrap();
        let mut map = map;
        assert!(remove_valence_one_step(&mut map));
        assert!(!remove_valence_one_step(&mut map));
        assert_eq!(map.graph.n_vertices, 1);
        assert_eq!(map.graph.n_edges(), 2);
        assert_eq!(map.edge_images[0], vec![0, 2]);
        let after = map.induced_automorphism().unwrap();
        assert!(outer_equal(&before, &after));
    }

    #[test]
    fn fold_rejects_mismatched_directions() {
        let mut map = rose_map(&["ab", "a"]);
        // Directions a+ (image a...) and b+ (image a...): both start with a.
        // Use a- instead: image of a- is (ab)-bar = B A, starts with B.
        assert_eq!(elementary_fold(&mut map, 0, 0), Err(FoldError::SameDirection));
        assert_eq!(elementary_fold(&mut map, 1, 2), Err(FoldError::NotFoldable));
    }

    #[test]
    fn fold_identifies_initial_segments() {
        // a -> ab, b -> a: directions a+ and b+ both have direction image a+.
        // Common image prefix: img(a+) = [a+, b+], img(b+) = [a+], so p = 1
        // and the b side needs no subdivision while the a side splits.
        let mut map = rose_map(&["ab", "a"]);
        let before = map.induced_automorphism().unwrap();
        let report = elementary_fold(&mut map, 0, 2).unwrap();
        assert!(!report.rank_dropped);
        assert_eq!(report.subdivisions, 1);
        assert!(map.validate().is_ok());
        assert!(map.graph.validate().is_ok());
        let after = map.induced_automorphism().unwrap();
        assert!(outer_equal(&before, &after));
    }

    #[test]
    fn fold_whole_loop_halves() {
        // Both germs of a loop share a direction image when the image word
        // starts and ends with the same conjugating letter: a -> b a b-bar
        // has img(a+) = [b+, a+, b-] and img(a-) = [b+, a-, b-], common
        // prefix length 1.
        let mut map = rose_map(&["baB", "b"]);
        let before = map.induced_automorphism().unwrap();
        let report = elementary_fold(&mut map, 0, 1).unwrap();
        assert!(!report.rank_dropped);
        assert_eq!(report.subdivisions, 2);
        assert!(map.validate().is_ok());
        assert!(map.graph.validate().is_ok());
        let after = map.induced_automorphism().unwrap();
        assert!(outer_equal(&before, &after));
    }

    #[test]
    fn fold_preserves_outer_class_across_random_positive_maps() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let rank = 3usize;
        // Positive transvections a_i -> a_i a_j as composition factors keep
        // every sample a genuine positive automorphism.
        let mut transvections = Vec::new();
        for i in 0..rank {
            for j in 0..rank {
                if i == j {
                    continue;
                }
                let mut images: Vec<String> = (0..rank)
                    .map(|k| ((b'a' + k as u8) as char).to_string())
                    .collect();
                images[i] = format!(
                    "{}{}",
                    (b'a' + i as u8) as char,
                    (b'a' + j as u8) as char
                );
                let refs: Vec<&str> = images.iter().map(|s| s.as_str()).collect();
                transvections.push(FreeAutomorphism::from_strings(rank, &refs, false).unwrap());
            }
        }
        let mut rng = StdRng::seed_from_u64(11);
        let mut folded = 0;
        for _ in 0..40 {
            let mut phi = transvections[rng.gen_range(0..transvections.len())].clone();
            for _ in 0..rng.gen_range(2..5) {
                let next = &transvections[rng.gen_range(0..transvections.len())];
                phi = phi.compose(next).unwrap();
            }
            assert!(phi.verify_basis().is_basis());
            let mut map = GraphMap::rose_map(&phi);
            let before = map.induced_automorphism().unwrap();
            // Fold any pair of directions with a shared direction image.
            let mut pair = None;
            'search: for d1 in 0..2 * rank {
                for d2 in d1 + 1..2 * rank {
                    let i1 = map.direction_image(d1);
                    if i1.is_some() && i1 == map.direction_image(d2) {
                        pair = Some((d1, d2));
                        break 'search;
                    }
                }
            }
            let Some((d1, d2)) = pair else { continue };
            let report = elementary_fold(&mut map, d1, d2).unwrap();
            assert!(!report.rank_dropped);
            folded += 1;
            assert!(map.validate().is_ok());
            assert!(map.graph.validate().is_ok());
            let after = map.induced_automorphism().unwrap();
            assert!(outer_equal(&before, &after), "fold changed outer class of {phi}");
        }
        assert!(folded >= 10, "too few foldable samples: {folded}");
    }
}
