//! Bounded search for indivisible periodic Nielsen paths.
//!
//! A periodic Nielsen path of an expanding irreducible train track map
//! decomposes as `reverse(alpha) beta` with both legs legal, meeting at
//! an illegal turn, and `h(alpha) = sigma alpha`, `h(beta) = sigma beta`
//! for one common cancelled path `sigma`, where `h` is the rotationless
//! power. Reversing the leg equation shows `reverse(alpha)` is a proper
//! prefix of its own image, hence a prefix of an eigenray: the
//! prefix-stable limit of iterating `h` on a fixed direction, or on a
//! germ at a fixed point interior to an edge. Interior fixed points are
//! exactly the same-orientation occurrences of an edge inside its own
//! image. The search therefore grows every eigenray out to a
//! critical-constant bound, reads candidate legs off their prefixes, and
//! matches cancelled paths across each illegal turn. A negative answer
//! certifies absence of legs below the bound; running out of budget is
//! reported as inconclusive.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::graphmap::{edge_of, partner, EdgePath, GraphMap, HalfEdge};

use super::turns::{direction_map, rotationless_data, Turn};

/// Endpoint of a leg inside an edge: the fixed point sits at `fraction`
/// of the way along `half`, measured in the eigenmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialTail {
    pub half: HalfEdge,
    pub fraction: f64,
}

/// One leg of a Nielsen path: full edges from the illegal turn outward,
/// plus an optional partial final edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Leg {
    pub path: EdgePath,
    pub partial: Option<PartialTail>,
}

/// Indivisible Nielsen path of the `power`-th iterate, recorded as the
/// illegal turn at its tip, the two legs, and the cancelled path.
#[derive(Debug, Clone, PartialEq)]
pub struct NielsenPath {
    pub turn: Turn,
    pub power: u64,
    pub sigma: EdgePath,
    pub left: Leg,
    pub right: Leg,
}

/// Outcome of the bounded periodic Nielsen path search.
#[derive(Debug, Clone, PartialEq)]
pub enum PnpStatus {
    /// A path exists; the witness satisfies the Nielsen identity.
    Found(NielsenPath),
    /// Exhaustive enumeration below the critical-constant bound found
    /// nothing, which rules out all periodic Nielsen paths.
    NoneFoundUpToBound,
    /// The work budget ran out before the enumeration completed.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PnpError {
    /// An edge image crosses an illegal or degenerate turn, or collapses.
    #[error("map is not a train track map")]
    NotTrainTrack,
    /// Transition matrix is reducible or the growth rate is one.
    #[error("map is not expanding irreducible")]
    NotExpanding,
}

/// Search bounds. `slack` scales the critical-constant cutoff on leg
/// eigenlength; `max_nodes` caps the letters of ray and image material
/// the search may produce.
#[derive(Debug, Clone, Copy)]
pub struct PnpOptions {
    pub slack: f64,
    pub max_nodes: u64,
}

impl Default for PnpOptions {
    fn default() -> Self {
        PnpOptions { slack: 2.0, max_nodes: 2_000_000 }
    }
}

/// All illegal nondegenerate turns: pairs of distinct directions at one
/// vertex identified by some forward iterate of the direction map.
/// `None` when a direction has no image, which means an edge collapses.
pub fn illegal_turns(g: &GraphMap) -> Option<Vec<Turn>> {
    let dmap = direction_map(g);
    let n = dmap.len();
    let mut step = Vec::with_capacity(n);
    for d in &dmap {
        step.push((*d)?);
    }
    let mut out = Vec::new();
    for v in 0..g.graph().n_vertices() {
        let dirs = g.graph().halves_at(v);
        for i in 0..dirs.len() {
            for j in i + 1..dirs.len() {
                let (mut x, mut y) = (dirs[i], dirs[j]);
                // Pair states live in a set of size n^2, so a merge
                // happens within n^2 steps or never.
                let mut merged = false;
                for _ in 0..n * n {
                    if x == y {
                        merged = true;
                        break;
                    }
                    x = step[x];
                    y = step[y];
                }
                if merged || x == y {
                    out.push(Turn::new(dirs[i], dirs[j]));
                }
            }
        }
    }
    out.sort_unstable();
    Some(out)
}

/// True when no edge collapses and every turn crossed by an edge image
/// is legal, so images of legal paths stay tight.
pub fn is_train_track(g: &GraphMap) -> bool {
    let illegal = match illegal_turns(g) {
        Some(t) => t,
        None => return false,
    };
    let illegal: BTreeSet<Turn> = illegal.into_iter().collect();
    for e in 0..g.graph().n_edges() {
        let img = g.half_image((e << 1) as HalfEdge);
        if img.is_empty() {
            return false;
        }
        for w in img.windows(2) {
            let t = Turn::new(partner(w[0]), w[1]);
            if t.is_degenerate() || illegal.contains(&t) {
                return false;
            }
        }
    }
    true
}

/// Eigenray data: an optional germ piece covering `[fraction, 1]` of
/// `head`, the letters of the head image past the fixed occurrence
/// (constant under iteration), and the grown full-letter tail.
struct Ray {
    head: Option<(HalfEdge, f64)>,
    head_tail: EdgePath,
    letters: EdgePath,
}

/// Reversed-leg candidate: the prefix of `ray` of `len` full letters,
/// its eigenlength, the direction it enters the tip vertex from, and
/// the reversed cancelled path its image appends.
struct Cand {
    ray: usize,
    len: usize,
    eigen: f64,
    tip: HalfEdge,
    sig: EdgePath,
}

struct BudgetExhausted;

struct Meter {
    left: u64,
}

impl Meter {
    fn spend(&mut self, n: usize) -> Result<(), BudgetExhausted> {
        let n = n as u64;
        if self.left < n {
            return Err(BudgetExhausted);
        }
        self.left -= n;
        Ok(())
    }
}

fn reversed(path: &[HalfEdge]) -> EdgePath {
    path.iter().rev().map(|&d| partner(d)).collect()
}

/// Runs the bounded periodic Nielsen path search on an expanding
/// irreducible train track map. Deterministic: candidates are ordered
/// by ray and prefix length, and illegal turns ascending.
pub fn pnp_search(g: &GraphMap, options: &PnpOptions) -> Result<PnpStatus, PnpError> {
    let pf = g.transition_matrix().pf().map_err(|_| PnpError::NotExpanding)?;
    if pf.lambda <= 1.0 + 1e-9 {
        return Err(PnpError::NotExpanding);
    }
    let turns = illegal_turns(g).ok_or(PnpError::NotTrainTrack)?;
    if !is_train_track(g) {
        return Err(PnpError::NotTrainTrack);
    }
    if turns.is_empty() {
        return Ok(PnpStatus::NoneFoundUpToBound);
    }
    let data = rotationless_data(g);
    let power = data.power;
    let lambda = pf.lambda.powi(power.min(i32::MAX as u64) as i32);
    if !lambda.is_finite() || lambda > 1e12 {
        return Ok(PnpStatus::Inconclusive);
    }
    let h = g.power(power);
    let ell = &pf.eigenvector;
    let lmax = ell.iter().cloned().fold(0.0, f64::max);
    let image_len = lambda * lmax;
    let cap = options.slack * 2.0 * lambda * image_len / (lambda - 1.0);
    let mut meter = Meter { left: options.max_nodes };
    let eigen_of = |p: &[HalfEdge]| p.iter().map(|&d| ell[edge_of(d)]).sum::<f64>();

    // Sources of reversed legs: one ray per fixed direction, plus two
    // germ rays per fixed point interior to an edge.
    let mut rays: Vec<Ray> = Vec::new();
    for &z in &data.periodic_directions {
        rays.push(Ray { head: None, head_tail: Vec::new(), letters: vec![z] });
    }
    for d in 0..2 * g.graph().n_edges() {
        let img = h.half_image(d);
        let le = ell[edge_of(d)];
        let mut off = 0.0;
        for (i, &f) in img.iter().enumerate() {
            if f == d {
                let u = off / (lambda - 1.0);
                if u > 1e-9 && u < le - 1e-9 {
                    rays.push(Ray {
                        head: Some((d, u / le)),
                        head_tail: img[i + 1..].to_vec(),
                        letters: img[i + 1..].to_vec(),
                    });
                }
            }
            off += ell[edge_of(f)];
        }
    }

    let grow = |ray: &mut Ray, meter: &mut Meter| -> Result<(), BudgetExhausted> {
        let head_eigen = ray
            .head
            .map(|(hf, q)| (1.0 - q) * ell[edge_of(hf)])
            .unwrap_or(0.0);
        loop {
            if head_eigen + eigen_of(&ray.letters) >= cap {
                return Ok(());
            }
            let mut next = ray.head_tail.clone();
            if ray.head.is_none() {
                next.clear();
            }
            next.extend(h.map_path(&ray.letters));
            meter.spend(next.len())?;
            debug_assert!(next.starts_with(&ray.letters), "eigenray lost prefix stability");
            if next.len() <= ray.letters.len() {
                return Ok(());
            }
            // Keep one letter of margin past the cap so every prefix
            // below it ends at a stored boundary.
            let mut eig = head_eigen;
            let mut keep = next.len();
            for (i, &f) in next.iter().enumerate() {
                eig += ell[edge_of(f)];
                if eig > cap + 2.0 * lmax {
                    keep = i + 1;
                    break;
                }
            }
            next.truncate(keep);
            ray.letters = next;
        }
    };
    for ray in &mut rays {
        if grow(ray, &mut meter).is_err() {
            return Ok(PnpStatus::Inconclusive);
        }
    }

    // Candidate legs: reversed prefixes ending at a letter boundary.
    // The image of a prefix extends it by the reversed cancelled path.
    let mut cands: Vec<Cand> = Vec::new();
    for (ri, ray) in rays.iter().enumerate() {
        let head_eigen = ray
            .head
            .map(|(hf, q)| (1.0 - q) * ell[edge_of(hf)])
            .unwrap_or(0.0);
        let jmin = usize::from(ray.head.is_none());
        let mut eig = head_eigen;
        for j in jmin..=ray.letters.len() {
            if j > 0 {
                eig += ell[edge_of(ray.letters[j - 1])];
            }
            if eig > cap {
                break;
            }
            let tip = if j == 0 {
                partner(ray.head.expect("headless rays start at one letter").0)
            } else {
                partner(ray.letters[j - 1])
            };
            let mut imaged = ray.head_tail.clone();
            if ray.head.is_none() {
                imaged.clear();
            }
            imaged.extend(h.map_path(&ray.letters[..j]));
            if meter.spend(imaged.len() + 1).is_err() {
                return Ok(PnpStatus::Inconclusive);
            }
            if imaged.len() <= j || imaged[..j] != ray.letters[..j] {
                debug_assert!(false, "prefix image must replay the prefix");
                continue;
            }
            cands.push(Cand { ray: ri, len: j, eigen: eig, tip, sig: imaged[j..].to_vec() });
        }
    }

    for t in &turns {
        let [d1, d2] = t.directions();
        for a in cands.iter().filter(|c| c.tip == d1) {
            for b in cands.iter().filter(|c| c.tip == d2) {
                if (a.eigen - b.eigen).abs() > 1e-6 * (1.0 + a.eigen) || a.sig != b.sig {
                    continue;
                }
                let leg = |c: &Cand| {
                    let ray = &rays[c.ray];
                    Leg {
                        path: reversed(&ray.letters[..c.len]),
                        partial: ray.head.map(|(hf, q)| PartialTail {
                            half: partner(hf),
                            fraction: 1.0 - q,
                        }),
                    }
                };
                let (left, right) = (leg(a), leg(b));
                if left.partial.is_none() && right.partial.is_none() {
                    // Independent check of the Nielsen identity on the
                    // assembled path.
                    let mut rho = rays[a.ray].letters[..a.len].to_vec();
                    rho.extend(reversed(&rays[b.ray].letters[..b.len]));
                    if h.map_path(&rho) != rho {
                        debug_assert!(false, "matched legs must give a fixed path");
                        continue;
                    }
                }
                return Ok(PnpStatus::Found(NielsenPath {
                    turn: *t,
                    power,
                    sigma: reversed(&a.sig),
                    left,
                    right,
                }));
            }
        }
    }
    Ok(PnpStatus::NoneFoundUpToBound)
}
