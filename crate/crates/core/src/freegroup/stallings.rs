//! Stallings folding over a wedge of labeled loops.
//!
//! `fold_wedge` attaches one subdivided loop per input word to a common
//! basepoint and folds until no two equally labeled edges leave a shared
//! vertex. The tuple is a basis of the free group exactly when the folded
//! graph is the standard rose: one vertex and one loop per generator.
//!
//! Folding keeps a log of elementary identifications. Replaying the log
//! backwards lifts each rose petal to a loop in the original wedge, which
//! expresses the corresponding generator as a word in the inputs; that is
//! the inverse automorphism. Each undo step inserts connector paths that
//! die under the fold map, so homotopy classes are preserved throughout.

use super::word::{reduce_letters, Letter, Word};
use std::collections::HashMap;
use std::fmt;

/// Outcome of the fold-based basis check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BasisCheck {
    Basis,
    NotBasis(NotBasisWitness),
}

impl BasisCheck {
    pub fn is_basis(&self) -> bool {
        matches!(self, BasisCheck::Basis)
    }
}

/// Certificate that a tuple fails to be a basis: the folded graph is not
/// the rank-`rank` rose.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotBasisWitness {
    pub rank: usize,
    /// Vertex count of the folded graph (a basis folds to a single vertex).
    pub folded_vertices: usize,
    /// Edge count of the folded graph (a basis folds to `rank` loops).
    pub folded_edges: usize,
    /// Generators that never appear as a loop at the folded basepoint.
    pub missing_loops: Vec<usize>,
    /// Abelianization determinant modulo a fixed prime, when it already
    /// rules the tuple out (`None` means the modular check passed).
    pub determinant_obstruction: Option<u64>,
}

impl fmt::Display for NotBasisWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(d) = self.determinant_obstruction {
            write!(f, "abelianization determinant is not a unit (residue {d})")
        } else {
            write!(
                f,
                "folded graph has {} vertices and {} edges, missing basepoint loops for generators {:?}",
                self.folded_vertices, self.folded_edges, self.missing_loops
            )
        }
    }
}

const PRIMES: [u64; 2] = [(1 << 61) - 1, 4611686018427387847];

/// Determinant of the abelianized image matrix modulo `p`. A basis must
/// have determinant +-1, so any other residue is a fast disproof.
fn det_mod(rank: usize, words: &[Word], p: u64) -> u64 {
    let mut m = vec![vec![0u64; rank]; rank];
    for (j, w) in words.iter().enumerate() {
        for &l in w.letters() {
            let i = (l.unsigned_abs() as usize) - 1;
            let delta = if l > 0 { 1 } else { p - 1 };
            m[i][j] = (m[i][j] + delta) % p;
        }
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % p as u128) as u64;
    let powmod = |mut a: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, a);
            }
            a = mulmod(a, a);
            e >>= 1;
        }
        acc
    };
    let mut det = 1u64;
    for col in 0..rank {
        let pivot = (col..rank).find(|&r| m[r][col] != 0);
        let Some(pr) = pivot else { return 0 };
        if pr != col {
            m.swap(pr, col);
            det = p - det;
        }
        det = mulmod(det, m[col][col]);
        let inv = powmod(m[col][col], p - 2);
        for r in col + 1..rank {
            if m[r][col] == 0 {
                continue;
            }
            let factor = mulmod(m[r][col], inv);
            for c in col..rank {
                let sub = mulmod(factor, m[col][c]);
                m[r][c] = (m[r][c] + p - sub) % p;
            }
        }
    }
    det % p
}

/// `true` when the modular determinants are consistent with det = +-1.
fn det_is_possibly_unit(rank: usize, words: &[Word]) -> Result<(), u64> {
    for p in PRIMES {
        let d = det_mod(rank, words, p);
        if d != 1 && d != p - 1 {
            return Err(d);
        }
    }
    Ok(())
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Merges `from` into `into`; both must be representatives.
    fn union_into(&mut self, into: usize, from: usize) {
        debug_assert_eq!(self.parent[into], into);
        debug_assert_eq!(self.parent[from], from);
        if into != from {
            self.parent[from] = into;
        }
    }
}

#[derive(Clone, Copy)]
struct EdgeRec {
    a: usize,
    b: usize,
    label: u32,
}

#[derive(Clone, Copy)]
struct FoldStep {
    kept: usize,
    removed: usize,
    /// Vertex representative that absorbed the other at this step.
    v_into: usize,
    v_from: usize,
    /// True when the folded pair left the shared vertex through the edges'
    /// positive direction (slot `+label`), false for slot `-label`.
    forward: bool,
}

struct Wedge {
    rank: usize,
    edges: Vec<EdgeRec>,
    /// Edge index of the designated non-tree edge of each petal (its last
    /// edge); crossing it reads off the petal's free-group generator.
    petal_mark: Vec<usize>,
    log: Vec<FoldStep>,
    verts: UnionFind,
    eclass: UnionFind,
    n_verts: usize,
}

impl Wedge {
    fn build(words: &[Word]) -> Self {
        let mut edges = Vec::new();
        let mut petal_mark = Vec::new();
        let mut n_verts = 1usize;
        for w in words {
            let len = w.len();
            debug_assert!(len > 0);
            let mut prev = 0usize;
            for (i, &l) in w.letters().iter().enumerate() {
                let next = if i + 1 == len {
                    0
                } else {
                    let v = n_verts;
                    n_verts += 1;
                    v
                };
                let rec = if l > 0 {
                    EdgeRec { a: prev, b: next, label: l as u32 }
                } else {
                    EdgeRec { a: next, b: prev, label: (-l) as u32 }
                };
                edges.push(rec);
                prev = next;
            }
            petal_mark.push(edges.len() - 1);
        }
        let ne = edges.len();
        Wedge {
            rank: words.len(),
            edges,
            petal_mark,
            log: Vec::new(),
            verts: UnionFind::new(n_verts),
            eclass: UnionFind::new(ne),
            n_verts,
        }
    }

    /// Folds to completion. Slot scanning restarts from affected vertices.
    fn fold(&mut self) {
        let mut queue: Vec<usize> = (0..self.n_verts).collect();
        while let Some(v) = queue.pop() {
            if self.verts.find(v) != v {
                continue;
            }
            loop {
                // slot -> (edge class, far endpoint)
                let mut slots: HashMap<i64, usize> = HashMap::new();
                let mut conflict: Option<(usize, usize, bool)> = None;
                for e in 0..self.edges.len() {
                    if self.eclass.find(e) != e {
                        continue;
                    }
                    let rec = self.edges[e];
                    let fa = self.verts.find(rec.a);
                    let fb = self.verts.find(rec.b);
                    if fa == v {
                        if let Some(&other) = slots.get(&(rec.label as i64)) {
                            conflict = Some((other, e, true));
                            break;
                        }
                        slots.insert(rec.label as i64, e);
                    }
                    if fb == v {
                        if let Some(&other) = slots.get(&-(rec.label as i64)) {
                            conflict = Some((other, e, false));
                            break;
                        }
                        slots.insert(-(rec.label as i64), e);
                    }
                }
                let Some((kept, removed, forward)) = conflict else { break };
                let (wk, wr) = if forward {
                    (self.verts.find(self.edges[kept].b), self.verts.find(self.edges[removed].b))
                } else {
                    (self.verts.find(self.edges[kept].a), self.verts.find(self.edges[removed].a))
                };
                self.eclass.union_into(kept, removed);
                if wk != wr {
                    self.verts.union_into(wk, wr);
                    queue.push(wk);
                }
                self.log.push(FoldStep { kept, removed, v_into: wk, v_from: wr, forward });
                // v itself may have been absorbed into wk
                if self.verts.find(v) != v {
                    break;
                }
            }
        }
    }

    /// Live edge classes with endpoints resolved in the current partition.
    fn live_edges(&mut self) -> Vec<(usize, usize, usize, u32)> {
        let mut out = Vec::new();
        for e in 0..self.edges.len() {
            if self.eclass.find(e) == e {
                let rec = self.edges[e];
                out.push((e, self.verts.find(rec.a), self.verts.find(rec.b), rec.label));
            }
        }
        out
    }

    fn count_vertices(&mut self) -> usize {
        let mut n = 0;
        for v in 0..self.n_verts {
            if self.verts.find(v) == v {
                n += 1;
            }
        }
        n
    }
}

/// Folds the wedge of `words` and reports whether they form a basis of the
/// rank-`words.len()` free group.
pub fn fold_wedge_basis_check(rank: usize, words: &[Word]) -> BasisCheck {
    debug_assert_eq!(rank, words.len());
    if words.iter().any(|w| w.is_identity()) {
        return BasisCheck::NotBasis(NotBasisWitness {
            rank,
            folded_vertices: 1,
            folded_edges: 0,
            missing_loops: (1..=rank).collect(),
            determinant_obstruction: None,
        });
    }
    if let Err(residue) = det_is_possibly_unit(rank, words) {
        return BasisCheck::NotBasis(NotBasisWitness {
            rank,
            folded_vertices: 0,
            folded_edges: 0,
            missing_loops: Vec::new(),
            determinant_obstruction: Some(residue),
        });
    }
    let mut wedge = Wedge::build(words);
    wedge.fold();
    basis_check_folded(&mut wedge)
}

fn basis_check_folded(wedge: &mut Wedge) -> BasisCheck {
    let rank = wedge.rank;
    let verts = wedge.count_vertices();
    let live = wedge.live_edges();
    let base = wedge.verts.find(0);
    let mut seen = vec![false; rank + 1];
    let mut rose = verts == 1 && live.len() == rank;
    for &(_, a, b, label) in &live {
        if a != base || b != base || label as usize > rank || seen[label as usize] {
            rose = false;
        } else {
            seen[label as usize] = true;
        }
    }
    if rose {
        BasisCheck::Basis
    } else {
        BasisCheck::NotBasis(NotBasisWitness {
            rank,
            folded_vertices: verts,
            folded_edges: live.len(),
            missing_loops: (1..=rank).filter(|&g| !seen[g]).collect(),
            determinant_obstruction: None,
        })
    }
}

/// Signed edge reference within a backtraced path: `+ (e+1)` traverses edge
/// `e` from `a` to `b`, negative the reverse.
type Step = i64;

fn step_edge(s: Step) -> usize {
    (s.unsigned_abs() as usize) - 1
}

/// Expresses each generator of the rose as a loop in the wedge, then reads
/// that loop as a word in the petal generators. Returns the inverse images,
/// or `None` when the tuple is not a basis.
pub fn invert_images(rank: usize, words: &[Word]) -> Option<Vec<Word>> {
    if words.iter().any(|w| w.is_identity()) || det_is_possibly_unit(rank, words).is_err() {
        return None;
    }
    let mut wedge = Wedge::build(words);
    wedge.fold();
    if !matches!(basis_check_folded(&mut wedge), BasisCheck::Basis) {
        return None;
    }

    // Locate, per generator, the live loop class carrying that label.
    let mut petal_of_label: Vec<Step> = vec![0; rank + 1];
    for (e, _, _, label) in wedge.live_edges() {
        petal_of_label[label as usize] = (e + 1) as Step;
    }
    let mut paths: Vec<Vec<Step>> = (1..=rank).map(|g| vec![petal_of_label[g]]).collect();

    // Undo folds newest-first. Partitions at stage i are the first i log
    // entries applied; rebuilding them per stage keeps the logic simple and
    // costs O(steps^2) on inputs that are small by construction.
    let n_steps = wedge.log.len();
    let replay = |count: usize| -> (UnionFind, UnionFind) {
        let mut ef = UnionFind::new(wedge.edges.len());
        let mut vf = UnionFind::new(wedge.n_verts);
        for step in &wedge.log[..count] {
            let k = ef.find(step.kept);
            let r = ef.find(step.removed);
            if k != r {
                ef.union_into(k, r);
            }
            let i = vf.find(step.v_into);
            let f = vf.find(step.v_from);
            if i != f {
                vf.union_into(i, f);
            }
        }
        (ef, vf)
    };

    for stage in (0..n_steps).rev() {
        let step = wedge.log[stage];
        let (mut estage, mut vstage) = replay(stage);
        let kept = estage.find(step.kept);
        let removed = estage.find(step.removed);
        // Connector from the absorbed-into vertex to the re-split vertex;
        // its image under the fold is null-homotopic.
        let connector: [Step; 2] = if step.forward {
            [-((kept + 1) as Step), (removed + 1) as Step]
        } else {
            [(kept + 1) as Step, -((removed + 1) as Step)]
        };
        let w_into = vstage.find(step.v_into);
        let w_from = vstage.find(step.v_from);
        let base = vstage.find(0);

        for path in paths.iter_mut() {
            let mut out: Vec<Step> = Vec::with_capacity(path.len() + 4);
            let mut pos = base;
            fn push_step(out: &mut Vec<Step>, s: Step) {
                if out.last() == Some(&-s) {
                    out.pop();
                } else {
                    out.push(s);
                }
            }
            let edges = &wedge.edges;
            let ends = |e: usize, vf: &mut UnionFind| -> (usize, usize) {
                let rec = edges[e];
                (vf.find(rec.a), vf.find(rec.b))
            };
            for &s in path.iter() {
                let e = step_edge(s);
                let eclass = estage.find(e);
                // Candidate identities of this element at the earlier stage.
                let (cands, ncands) = if eclass == kept || eclass == removed {
                    ([kept, removed], 2)
                } else {
                    ([eclass, eclass], 1)
                };
                let pick = |pos: usize, vf: &mut UnionFind| -> Option<usize> {
                    for &c in &cands[..ncands] {
                        let rec = edges[c];
                        let origin = if s > 0 { vf.find(rec.a) } else { vf.find(rec.b) };
                        if origin == pos {
                            return Some(c);
                        }
                    }
                    None
                };
                let c = match pick(pos, &mut vstage) {
                    Some(c) => c,
                    None => {
                        // Junction sits on the re-split vertex pair; insert
                        // the connector in the needed direction.
                        if pos == w_into {
                            for &cs in &connector {
                                push_step(&mut out, cs);
                            }
                            pos = w_from;
                        } else {
                            debug_assert_eq!(pos, w_from);
                            for &cs in connector.iter().rev() {
                                push_step(&mut out, -cs);
                            }
                            pos = w_into;
                        }
                        pick(pos, &mut vstage)
                            .expect("fold undo: junction must resolve through the split pair")
                    }
                };
                let (a, b) = ends(c, &mut vstage);
                push_step(&mut out, if s > 0 { (c + 1) as Step } else { -((c + 1) as Step) });
                pos = if s > 0 { b } else { a };
            }
            if pos != base {
                if pos == w_into {
                    for &cs in &connector {
                        push_step(&mut out, cs);
                    }
                    pos = w_from;
                } else {
                    for &cs in connector.iter().rev() {
                        push_step(&mut out, -cs);
                    }
                    pos = w_into;
                }
                debug_assert_eq!(pos, base, "fold undo: loop must close at the basepoint");
            }
            *path = out;
        }
    }

    // Stage 0: read each loop in the wedge through the petal marks.
    let mut mark_of_edge: HashMap<usize, (usize, bool)> = HashMap::new();
    for (j, &e) in wedge.petal_mark.iter().enumerate() {
        // Whether the petal's last letter was positive decides the reading
        // orientation of the marked edge.
        let positive = words[j].letters()[words[j].len() - 1] > 0;
        mark_of_edge.insert(e, (j, positive));
    }
    let mut images = Vec::with_capacity(rank);
    for path in paths {
        let mut letters: Vec<Letter> = Vec::new();
        for s in path {
            let e = step_edge(s);
            if let Some(&(petal, positive)) = mark_of_edge.get(&e) {
                let traversed_forward = s > 0;
                // Crossing the marked edge along the petal's own direction
                // emits the generator, against it the inverse.
                let sign = if traversed_forward == positive { 1 } else { -1 };
                letters.push(sign * ((petal + 1) as Letter));
            }
        }
        images.push(Word::new(reduce_letters(letters)).expect("reduced letters"));
    }
    Some(images)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s, false).unwrap()
    }

    #[test]
    fn rose_basis_recognized() {
        assert!(fold_wedge_basis_check(2, &[w("a"), w("b")]).is_basis());
        assert!(fold_wedge_basis_check(3, &[w("b"), w("c"), w("ab")]).is_basis());
    }

    #[test]
    fn repeated_generator_is_not_a_basis() {
        let check = fold_wedge_basis_check(2, &[w("a"), w("a")]);
        assert!(!check.is_basis());
    }

    #[test]
    fn commuting_pair_rejected_by_determinant_or_fold() {
        let check = fold_wedge_basis_check(2, &[w("ab"), w("ba")]);
        assert!(!check.is_basis());
    }

    #[test]
    fn conjugated_standard_basis_folds_to_rose() {
        // (ab) a (ab)^-1 and (ab) b (ab)^-1 generate everything.
        assert!(fold_wedge_basis_check(2, &[w("abaBA"), w("abA")]).is_basis());
    }

    #[test]
    fn invert_of_nielsen_map() {
        let images = invert_images(2, &[w("ab"), w("b")]).unwrap();
        assert_eq!(images[0].to_text().unwrap(), "aB");
        assert_eq!(images[1].to_text().unwrap(), "b");
    }

    #[test]
    fn invert_of_cyclic_shift_map() {
        let images = invert_images(3, &[w("b"), w("c"), w("ab")]).unwrap();
        assert_eq!(images[0].to_text().unwrap(), "cA");
        assert_eq!(images[1].to_text().unwrap(), "a");
        assert_eq!(images[2].to_text().unwrap(), "b");
    }
}
