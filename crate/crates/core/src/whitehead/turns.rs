//! Turns, direction maps, the taken-turn closure, and rotationless data.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::graphmap::{partner, GraphMap, HalfEdge};

/// Unordered pair of directions (half-edges) at a common vertex, stored
/// with the smaller half first. Degenerate when the two coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Turn {
    a: HalfEdge,
    b: HalfEdge,
}

impl Turn {
    pub fn new(x: HalfEdge, y: HalfEdge) -> Self {
        if x <= y {
            Turn { a: x, b: y }
        } else {
            Turn { a: y, b: x }
        }
    }

    pub fn smaller(&self) -> HalfEdge {
        self.a
    }

    pub fn larger(&self) -> HalfEdge {
        self.b
    }

    pub fn is_degenerate(&self) -> bool {
        self.a == self.b
    }

    /// Both directions, smaller first.
    pub fn directions(&self) -> [HalfEdge; 2] {
        [self.a, self.b]
    }
}

/// `Dg` on directions: half-edge `d` goes to the first half-edge of the
/// image path of `d`. `None` for an edge with point image.
pub fn direction_map(g: &GraphMap) -> Vec<Option<HalfEdge>> {
    let n = g.graph().n_edges();
    (0..2 * n).map(|h| g.direction_image(h)).collect()
}

fn map_turn(dm: &[Option<HalfEdge>], t: Turn) -> Option<Turn> {
    Some(Turn::new(dm[t.a]?, dm[t.b]?))
}

/// Where and how the closure first met a degenerate turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegenerateEvidence {
    /// The degenerate turn itself.
    pub turn: Turn,
    /// The crossed turn whose direction orbit degenerates.
    pub seed: Turn,
    /// Iterate of the map in whose edge images the degeneracy appears:
    /// the seed is crossed by first images, its k-th direction image by
    /// images of the (k+1)-st iterate.
    pub iterate: usize,
}

/// Least turn set containing every turn crossed by an edge image and
/// closed under the direction map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurnClosure {
    /// The full closure; contains degenerate turns exactly when the map
    /// is not a train track map.
    pub turns: BTreeSet<Turn>,
    /// Turns crossed directly by edge images.
    pub seeds: BTreeSet<Turn>,
    /// First degeneracy discovered, in breadth-first closure order.
    pub first_degenerate: Option<DegenerateEvidence>,
}

impl TurnClosure {
    /// Nondegenerate members, the taken turns proper.
    pub fn nondegenerate(&self) -> impl Iterator<Item = &Turn> {
        self.turns.iter().filter(|t| !t.is_degenerate())
    }

    /// Turns based at a given vertex.
    pub fn at_vertex<'a>(&'a self, g: &'a GraphMap, v: usize) -> impl Iterator<Item = &'a Turn> {
        self.nondegenerate().filter(move |t| g.graph().origin(t.a) == v)
    }
}

/// Computes the taken-turn closure of a tightened map by breadth-first
/// iteration of the direction map from the crossed turns.
pub fn taken_turns(g: &GraphMap) -> TurnClosure {
    let dm = direction_map(g);
    let mut seeds = BTreeSet::new();
    for e in 0..g.graph().n_edges() {
        let img = g.edge_image(e);
        for w in img.windows(2) {
            seeds.insert(Turn::new(partner(w[0]), w[1]));
        }
    }
    let mut turns = seeds.clone();
    let mut first_degenerate = None;
    // Queue entries carry the original seed and the direction-map depth.
    let mut queue: VecDeque<(Turn, Turn, usize)> =
        seeds.iter().map(|&t| (t, t, 0)).collect();
    while let Some((t, seed, depth)) = queue.pop_front() {
        let Some(next) = map_turn(&dm, t) else { continue };
        if turns.insert(next) {
            queue.push_back((next, seed, depth + 1));
        }
        if next.is_degenerate() && first_degenerate.is_none() {
            first_degenerate = Some(DegenerateEvidence {
                turn: next,
                seed,
                iterate: depth + 2,
            });
        }
    }
    TurnClosure { turns, seeds, first_degenerate }
}

/// Rotationless bookkeeping: the power at which every periodic direction
/// and vertex becomes fixed, together with the periodic sets and the
/// principal vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RotationlessData {
    /// Least `k >= 1` such that the `k`-th power of the direction map
    /// fixes all periodic directions and the `k`-th power of the vertex
    /// map fixes all periodic vertices: the lcm of the cycle lengths.
    pub power: u64,
    /// Directions on direction-map cycles.
    pub periodic_directions: BTreeSet<HalfEdge>,
    /// Vertices on vertex-map cycles.
    pub periodic_vertices: BTreeSet<usize>,
    /// Periodic vertices carrying at least three periodic directions.
    pub principal_vertices: BTreeSet<usize>,
    /// Periodic directions grouped by their base vertex.
    pub periodic_directions_at: BTreeMap<usize, Vec<HalfEdge>>,
}

/// Nodes lying on cycles of a finite functional graph given by `next`
/// (`None` breaks the walk), plus the lengths of those cycles.
fn cycle_nodes(next: &[Option<usize>]) -> (BTreeSet<usize>, Vec<u64>) {
    let n = next.len();
    let mut indeg = vec![0usize; n];
    for f in next.iter().flatten() {
        indeg[*f] += 1;
    }
    let mut queue: VecDeque<usize> =
        (0..n).filter(|&x| indeg[x] == 0).collect();
    let mut dead = vec![false; n];
    while let Some(x) = queue.pop_front() {
        dead[x] = true;
        if let Some(f) = next[x] {
            indeg[f] -= 1;
            if indeg[f] == 0 {
                queue.push_back(f);
            }
        }
    }
    // Nodes with None images are sources of nothing and die above unless
    // targeted; a surviving node always has a Some image.
    let cyclic: BTreeSet<usize> = (0..n).filter(|&x| !dead[x] && next[x].is_some()).collect();
    let mut seen = BTreeSet::new();
    let mut lengths = Vec::new();
    for &start in &cyclic {
        if seen.contains(&start) {
            continue;
        }
        let mut len = 0u64;
        let mut cur = start;
        loop {
            seen.insert(cur);
            len += 1;
            cur = next[cur].expect("cyclic node has an image");
            if cur == start {
                break;
            }
        }
        lengths.push(len);
    }
    (cyclic, lengths)
}

fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        a.max(b).max(1)
    } else {
        a / gcd(a, b) * b
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Analyzes direction and vertex dynamics of a tightened map.
pub fn rotationless_data(g: &GraphMap) -> RotationlessData {
    let dm = direction_map(g);
    let (periodic_directions, dir_cycles) = cycle_nodes(&dm);
    let vm: Vec<Option<usize>> =
        (0..g.graph().n_vertices()).map(|v| Some(g.vertex_image(v))).collect();
    let (periodic_vertices, vert_cycles) = cycle_nodes(&vm);
    let mut power = 1u64;
    for l in dir_cycles.iter().chain(vert_cycles.iter()) {
        power = lcm(power, *l);
    }
    let mut periodic_directions_at: BTreeMap<usize, Vec<HalfEdge>> = BTreeMap::new();
    for &d in &periodic_directions {
        periodic_directions_at.entry(g.graph().origin(d)).or_default().push(d);
    }
    let principal_vertices = periodic_vertices
        .iter()
        .copied()
        .filter(|v| periodic_directions_at.get(v).map_or(0, Vec::len) >= 3)
        .collect();
    RotationlessData {
        power,
        periodic_directions,
        periodic_vertices,
        principal_vertices,
        periodic_directions_at,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freegroup::FreeAutomorphism;

    fn rose(images: &[&str]) -> GraphMap {
        GraphMap::rose_map(&FreeAutomorphism::from_strings(images.len(), images, false).unwrap())
    }

    // Halves on the rank-3 rose: a+=0, a-=1, b+=2, b-=3, c+=4, c-=5.
    const AP: usize = 0;
    const AM: usize = 1;
    const BP: usize = 2;
    const BM: usize = 3;
    const CP: usize = 4;
    const CM: usize = 5;

    #[test]
    fn direction_map_of_cubic_example() {
        let g = rose(&["b", "c", "ab"]);
        let dm = direction_map(&g);
        assert_eq!(dm[AP], Some(BP));
        assert_eq!(dm[BP], Some(CP));
        assert_eq!(dm[CP], Some(AP));
        assert_eq!(dm[AM], Some(BM));
        assert_eq!(dm[BM], Some(CM));
        assert_eq!(dm[CM], Some(BM));
    }

    #[test]
    fn direction_map_of_fibonacci_example() {
        let g = rose(&["ab", "a"]);
        let dm = direction_map(&g);
        assert_eq!(dm[AP], Some(AP));
        assert_eq!(dm[BP], Some(AP));
        assert_eq!(dm[AM], Some(BM));
        assert_eq!(dm[BM], Some(AM));
    }

    #[test]
    fn taken_turns_of_identity_is_empty() {
        let g = rose(&["a", "b"]);
        let closure = taken_turns(&g);
        assert!(closure.turns.is_empty());
        assert!(closure.first_degenerate.is_none());
    }

    #[test]
    fn taken_turns_of_cubic_example() {
        let g = rose(&["b", "c", "ab"]);
        let closure = taken_turns(&g);
        let expect: BTreeSet<Turn> = [
            Turn::new(AM, BP),
            Turn::new(BM, CP),
            Turn::new(CM, AP),
            Turn::new(BM, BP),
            Turn::new(CM, CP),
            Turn::new(BM, AP),
            Turn::new(CM, BP),
        ]
        .into_iter()
        .collect();
        assert_eq!(closure.turns, expect);
        assert_eq!(closure.seeds.len(), 1);
        assert!(closure.seeds.contains(&Turn::new(AM, BP)));
        assert!(closure.first_degenerate.is_none());
    }

    #[test]
    fn taken_turns_of_fibonacci_example() {
        let g = rose(&["ab", "a"]);
        let closure = taken_turns(&g);
        let expect: BTreeSet<Turn> =
            [Turn::new(AM, BP), Turn::new(BM, AP), Turn::new(AM, AP)]
                .into_iter()
                .collect();
        assert_eq!(closure.turns, expect);
        assert!(closure.first_degenerate.is_none());
    }

    #[test]
    fn degenerate_closure_detected_at_fourth_iterate() {
        // a maps to ab, b maps to a inverse; the fourth iterate of a is
        // the first unreduced one.
        let g = rose(&["ab", "A"]);
        let closure = taken_turns(&g);
        let ev = closure.first_degenerate.expect("degeneracy");
        assert_eq!(ev.turn, Turn::new(AP, AP));
        assert_eq!(ev.seed, Turn::new(AM, BP));
        assert_eq!(ev.iterate, 4);
        // Cross-check by direct iteration: substituting into the third
        // image without reduction yields more letters than the reduced
        // fourth image, witnessing the cancellation at iterate four.
        let phi = FreeAutomorphism::from_strings(2, &["ab", "A"], false).unwrap();
        let p3 = phi.compose(&phi).unwrap().compose(&phi).unwrap();
        assert_eq!(p3.images()[0].to_text().unwrap(), "abABA");
        let unreduced: usize = p3.images()[0]
            .letters()
            .iter()
            .map(|&l| phi.image(l.unsigned_abs() as usize).len())
            .sum();
        let reduced = phi.apply(&p3.images()[0]).len();
        assert!(reduced < unreduced, "reduced {reduced} vs substituted {unreduced}");
    }

    #[test]
    fn closure_is_direction_closed() {
        for images in [&["b", "c", "ab"][..], &["ab", "a"][..], &["abc", "bc", "c"][..]] {
            let g = rose(images);
            let closure = taken_turns(&g);
            let dm = direction_map(&g);
            for &t in &closure.turns {
                let img = map_turn(&dm, t).unwrap();
                assert!(closure.turns.contains(&img), "{t:?} -> {img:?} escapes");
            }
        }
    }

    #[test]
    fn rotationless_power_of_cubic_example() {
        let g = rose(&["b", "c", "ab"]);
        let data = rotationless_data(&g);
        assert_eq!(data.power, 6);
        let fixed: BTreeSet<usize> = [AP, BP, CP, BM, CM].into_iter().collect();
        assert_eq!(data.periodic_directions, fixed);
        assert_eq!(data.principal_vertices.len(), 1);
        assert_eq!(data.periodic_directions_at[&0].len(), 5);
    }

    #[test]
    fn rotationless_power_of_identity_is_one() {
        let g = rose(&["a", "b", "c"]);
        let data = rotationless_data(&g);
        assert_eq!(data.power, 1);
        assert_eq!(data.periodic_directions.len(), 6);
        assert_eq!(data.principal_vertices.len(), 1);
    }

    #[test]
    fn rotationless_power_of_fibonacci_example() {
        let g = rose(&["ab", "a"]);
        let data = rotationless_data(&g);
        assert_eq!(data.power, 2);
        let fixed: BTreeSet<usize> = [AP, AM, BM].into_iter().collect();
        assert_eq!(data.periodic_directions, fixed);
        // Rose vertex has three periodic directions: principal.
        assert_eq!(data.principal_vertices.len(), 1);
    }

    /// Brute-force oracle: positive maps never cancel under iteration,
    /// so the closure must equal the set of turns crossed by iterated
    /// edge images. Eight iterates suffice because a direction pair of a
    /// rank-3 positive map has preperiod at most 2 and cycle at most 6.
    #[test]
    fn closure_equals_turns_of_iterated_images() {
        use rand::{Rng, SeedableRng};
        use std::collections::BTreeSet;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let letters = ["a", "b", "c"];
        for _ in 0..20 {
            let imgs: Vec<String> = (0..3)
                .map(|_| {
                    let len = rng.gen_range(1..=4);
                    (0..len).map(|_| letters[rng.gen_range(0..3)]).collect()
                })
                .collect();
            let refs: Vec<&str> = imgs.iter().map(String::as_str).collect();
            let g = rose(&refs);
            let closure = taken_turns(&g);
            let mut brute = BTreeSet::new();
            for e in 0..3usize {
                let mut path = g.half_image((e << 1) as HalfEdge);
                for k in 1..=8 {
                    for w in path.windows(2) {
                        brute.insert(Turn::new(crate::graphmap::partner(w[0]), w[1]));
                    }
                    if k < 8 {
                        path = g.map_path(&path);
                    }
                }
            }
            assert_eq!(brute, closure.turns, "closure mismatch for {imgs:?}");
        }
    }
}
