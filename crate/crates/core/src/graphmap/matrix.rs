//! Transition matrices: Perron-Frobenius data and irreducibility.

use serde::Serialize;
use thiserror::Error;

/// Nonnegative integer matrix indexed by unoriented edges; entry `(e, f)`
/// counts traversals of `f` in either direction by the image of `e`.
/// Row `e` therefore sums to the combinatorial length of the image of `e`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransitionMatrix {
    n: usize,
    counts: Vec<u64>,
}

/// Failure of a Perron-Frobenius computation.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("matrix is reducible; invariant edge set {invariant_edges:?}")]
    Reducible { invariant_edges: Vec<usize> },
    #[error("power iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
}

/// Irreducibility classification of a nonnegative matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Primitivity {
    /// Some power is strictly positive (checked up to the Wielandt bound).
    Primitive,
    /// Irreducible with period greater than one.
    IrreducibleNotPrimitive { period: usize },
    /// Carries a proper nonempty reachability-closed edge set.
    Reducible { invariant_edges: Vec<usize> },
}

/// Converged Perron-Frobenius data of an irreducible matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronFrobenius {
    /// Spectral radius.
    pub lambda: f64,
    /// Right eigenvector, positive, normalized to sum one. As edge
    /// lengths it satisfies: length of image of `e` equals lambda times
    /// length of `e`.
    pub eigenvector: Vec<f64>,
    /// Power iteration steps used.
    pub iterations: usize,
}

const PF_REL_TOL: f64 = 1e-10;
const PF_MAX_ITER: usize = 100_000;

impl TransitionMatrix {
    pub fn new(n: usize, counts: Vec<u64>) -> Self {
        assert_eq!(counts.len(), n * n, "row-major square matrix");
        TransitionMatrix { n, counts }
    }

    pub fn from_rows(rows: &[&[u64]]) -> Self {
        let n = rows.len();
        let mut counts = Vec::with_capacity(n * n);
        for row in rows {
            assert_eq!(row.len(), n, "square matrix");
            counts.extend_from_slice(row);
        }
        TransitionMatrix { n, counts }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn entry(&self, e: usize, f: usize) -> u64 {
        self.counts[e * self.n + f]
    }

    pub fn row_sum(&self, e: usize) -> u64 {
        self.counts[e * self.n..(e + 1) * self.n].iter().sum()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        (0..self.n)
            .map(|e| self.counts[e * self.n..(e + 1) * self.n].to_vec())
            .collect()
    }

    fn successors(&self, e: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&f| self.entry(e, f) > 0)
    }

    /// Strongly connected components in reverse topological order of the
    /// condensation (Kosaraju), as sorted edge lists.
    fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n;
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        for start in 0..n {
            if seen[start] {
                continue;
            }
            // Iterative DFS recording finish order.
            let mut stack = vec![(start, 0usize)];
            seen[start] = true;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                let mut advanced = false;
                for f in *next..n {
                    *next = f + 1;
                    if self.entry(v, f) > 0 && !seen[f] {
                        seen[f] = true;
                        stack.push((f, 0));
                        advanced = true;
                        break;
                    }
                }
                if !advanced {
                    order.push(v);
                    stack.pop();
                }
            }
        }
        let mut comp = vec![usize::MAX; n];
        let mut comps: Vec<Vec<usize>> = Vec::new();
        for &start in order.iter().rev() {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut members = vec![start];
            comp[start] = id;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for u in 0..n {
                    // Transposed arcs.
                    if self.entry(u, v) > 0 && comp[u] == usize::MAX {
                        comp[u] = id;
                        members.push(u);
                        stack.push(u);
                    }
                }
            }
            members.sort_unstable();
            comps.push(members);
        }
        comps
    }

    /// Whether the support digraph is strongly connected; for size one,
    /// whether the single entry is positive.
    pub fn is_irreducible(&self) -> bool {
        if self.n == 1 {
            return self.counts[0] > 0;
        }
        self.components().len() == 1
    }

    /// A proper nonempty invariant edge set (reachability-closed) of a
    /// reducible matrix: the union of sink components of the condensation,
    /// or the first sink alone when every component is a sink. `None` for
    /// irreducible matrices.
    pub fn invariant_edge_set(&self) -> Option<Vec<usize>> {
        if self.is_irreducible() {
            return None;
        }
        let comps = self.components();
        let comp_of = {
            let mut c = vec![0usize; self.n];
            for (id, members) in comps.iter().enumerate() {
                for &e in members {
                    c[e] = id;
                }
            }
            c
        };
        let mut sinks: Vec<&Vec<usize>> = comps
            .iter()
            .filter(|members| {
                members
                    .iter()
                    .all(|&e| self.successors(e).all(|f| comp_of[f] == comp_of[e]))
            })
            .collect();
        sinks.sort_by_key(|members| members[0]);
        let total: usize = sinks.iter().map(|m| m.len()).sum();
        let mut witness: Vec<usize> = if total == self.n {
            // Every component is a sink; any single one is proper.
            sinks[0].clone()
        } else {
            sinks.iter().flat_map(|m| m.iter().copied()).collect()
        };
        witness.sort_unstable();
        Some(witness)
    }

    /// Perron-Frobenius eigenvalue and right eigenvector by power
    /// iteration on `M + I` (shifted to kill periodicity), with
    /// Collatz-Wielandt bounds as the stopping rule.
    pub fn pf(&self) -> Result<PerronFrobenius, MatrixError> {
        if let Some(invariant_edges) = self.invariant_edge_set() {
            return Err(MatrixError::Reducible { invariant_edges });
        }
        let n = self.n;
        let mut v = vec![1.0 / n as f64; n];
        let mut w = vec![0.0; n];
        for it in 1..=PF_MAX_ITER {
            for i in 0..n {
                let mut acc = v[i];
                for j in 0..n {
                    acc += self.counts[i * n + j] as f64 * v[j];
                }
                w[i] = acc;
            }
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for i in 0..n {
                let r = w[i] / v[i];
                lo = lo.min(r);
                hi = hi.max(r);
            }
            let sum: f64 = w.iter().sum();
            for i in 0..n {
                w[i] /= sum;
            }
            std::mem::swap(&mut v, &mut w);
            if hi - lo <= PF_REL_TOL * hi {
                return Ok(PerronFrobenius {
                    lambda: (lo + hi) / 2.0 - 1.0,
                    eigenvector: v,
                    iterations: it,
                });
            }
        }
        Err(MatrixError::NoConvergence { iterations: PF_MAX_ITER })
    }

    /// Classifies the matrix, verifying primitivity by boolean powers up
    /// to the Wielandt bound `n^2 - 2n + 2`.
    pub fn primitivity(&self) -> Primitivity {
        if let Some(invariant_edges) = self.invariant_edge_set() {
            return Primitivity::Reducible { invariant_edges };
        }
        let n = self.n;
        let words = n.div_ceil(64);
        let full_last = if n % 64 == 0 { u64::MAX } else { (1u64 << (n % 64)) - 1 };
        let base: Vec<Vec<u64>> = (0..n)
            .map(|i| {
                let mut row = vec![0u64; words];
                for j in self.successors(i) {
                    row[j / 64] |= 1 << (j % 64);
                }
                row
            })
            .collect();
        let all_ones = |rows: &[Vec<u64>]| {
            rows.iter().all(|row| {
                row[..words - 1].iter().all(|&x| x == u64::MAX) && row[words - 1] == full_last
            })
        };
        let wielandt = n * n + 2 - 2 * n;
        let mut power = base.clone();
        for _ in 1..=wielandt {
            if all_ones(&power) {
                return Primitivity::Primitive;
            }
            // Boolean product power * base.
            let mut next = vec![vec![0u64; words]; n];
            for i in 0..n {
                for j in 0..n {
                    if power[i][j / 64] >> (j % 64) & 1 == 1 {
                        for wpos in 0..words {
                            next[i][wpos] |= base[j][wpos];
                        }
                    }
                }
            }
            power = next;
        }
        if all_ones(&power) {
            return Primitivity::Primitive;
        }
        Primitivity::IrreducibleNotPrimitive { period: self.period() }
    }

    /// Period of an irreducible matrix: gcd of closed-walk lengths,
    /// computed from BFS level differences along arcs.
    fn period(&self) -> usize {
        let n = self.n;
        let mut dist = vec![usize::MAX; n];
        dist[0] = 0;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            for f in self.successors(v) {
                if dist[f] == usize::MAX {
                    dist[f] = dist[v] + 1;
                    queue.push_back(f);
                }
            }
        }
        let mut g = 0usize;
        for v in 0..n {
            for f in self.successors(v) {
                let diff = (dist[v] + 1).abs_diff(dist[f]);
                g = gcd(g, diff);
            }
        }
        if g == 0 {
            1
        } else {
            g
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
