//! The asymmetric Lipschitz distance, computed over candidate loops.
//!
//! The stretch of a loop is the metric length of its tightened image
//! under the change of markings, divided by its own length. The distance
//! is the log of the maximal stretch, and the maximum over all loops is
//! attained on a candidate, so the computation is a finite maximum.
//! Lengths are summed in sorted edge order so that a loop and any
//! rotation of it get bit-identical lengths; identical points then
//! stretch every candidate by exactly one.

use crate::graphmap::{cyclic_tighten_path, edge_of, HalfEdge, MarkedGraph};

use super::candidates::{candidates, CandidateLoop};
use super::point::{OuterSpaceError, OuterSpacePoint};

/// Directed distance with the loop realizing the maximal stretch.
#[derive(Debug, Clone)]
pub struct DistanceResult {
    pub d_cv: f64,
    pub witness: CandidateLoop,
}

fn check_ranks(a: &OuterSpacePoint, b: &OuterSpacePoint) -> Result<(), OuterSpaceError> {
    if a.rank() != b.rank() {
        return Err(OuterSpaceError::RankMismatch { left: a.rank(), right: b.rank() });
    }
    Ok(())
}

/// Path length summed in sorted order, so equal edge multisets give
/// bit-identical totals regardless of traversal order.
fn multiset_length(g: &MarkedGraph, path: &[HalfEdge]) -> f64 {
    let mut lengths: Vec<f64> = path.iter().map(|&h| g.length(edge_of(h))).collect();
    lengths.sort_by(|a, b| a.total_cmp(b));
    lengths.iter().sum()
}

/// Stretch of one essential loop of `from` mapped into `to` through the
/// difference of markings. The loop need not pass the basepoint.
pub fn loop_stretch(
    from: &OuterSpacePoint,
    to: &OuterSpacePoint,
    loop_path: &[HalfEdge],
) -> Result<f64, OuterSpaceError> {
    check_ranks(from, to)?;
    let g = from.graph();
    let mut tight = loop_path.to_vec();
    if !g.is_path(&tight) {
        return Err(OuterSpaceError::NotALoop);
    }
    cyclic_tighten_path(&mut tight);
    let closed = match tight.first() {
        None => false,
        Some(&h) => g.origin(h) == g.terminus(*tight.last().unwrap()),
    };
    if !closed {
        return Err(OuterSpaceError::NotALoop);
    }
    // Tree edges never contribute to the coordinate word, so the class is
    // read correctly from a loop based anywhere.
    let word = from.coords().loop_to_reference(&tight);
    let mut image = to.coords().reference_to_loop(to.graph(), &word);
    cyclic_tighten_path(&mut image);
    debug_assert!(!image.is_empty(), "essential loops stay essential");
    Ok(multiset_length(to.graph(), &image) / multiset_length(g, &tight))
}

/// Directed Lipschitz distance: log of the maximal candidate stretch.
pub fn lipschitz_distance(
    from: &OuterSpacePoint,
    to: &OuterSpacePoint,
) -> Result<DistanceResult, OuterSpaceError> {
    check_ranks(from, to)?;
    let mut best: Option<(f64, CandidateLoop)> = None;
    for cand in candidates(from) {
        let s = loop_stretch(from, to, &cand.path)?;
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, cand));
        }
    }
    let (max, witness) = best.expect("points of rank at least two have candidates");
    let d = max.ln();
    debug_assert!(d > -1e-9, "volume-one points cannot contract every loop");
    Ok(DistanceResult { d_cv: d.max(0.0), witness })
}

/// Symmetrized distance: the sum of the two directed distances.
pub fn sym_distance(
    a: &OuterSpacePoint,
    b: &OuterSpacePoint,
) -> Result<f64, OuterSpaceError> {
    Ok(lipschitz_distance(a, b)?.d_cv + lipschitz_distance(b, a)?.d_cv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::freegroup::{FreeAutomorphism, Transvection};
    use crate::graphmap::{forward, partner, EdgePath};
    use crate::outerspace::point::normalize_volume;

    fn rose_point(lengths: &[f64]) -> OuterSpacePoint {
        let rank = lengths.len();
        let edges: Vec<(usize, usize)> = (0..rank).map(|_| (0, 0)).collect();
        let marking: Vec<EdgePath> = (0..rank).map(|e| vec![forward(e)]).collect();
        normalize_volume(
            &MarkedGraph::new(1, &edges, lengths, 0, marking, None).unwrap(),
        )
        .unwrap()
    }

    fn barbell_point() -> OuterSpacePoint {
        let g = MarkedGraph::new(
            2,
            &[(0, 0), (1, 1), (0, 1)],
            &[0.4, 0.4, 0.2],
            0,
            vec![vec![0], vec![4, 2, 5]],
            None,
        )
        .unwrap();
        OuterSpacePoint::new(g).unwrap()
    }

    #[test]
    fn identical_points_are_at_distance_exactly_zero() {
        for p in [rose_point(&[0.5, 0.5]), barbell_point()] {
            let d = lipschitz_distance(&p, &p).unwrap();
            assert_eq!(d.d_cv, 0.0);
            assert_eq!(sym_distance(&p, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn rank_two_rose_pair_realizes_the_known_distances() {
        let x = rose_point(&[0.5, 0.5]);
        let y = rose_point(&[1.0 / 3.0, 2.0 / 3.0]);
        // Stretches from x to y: a -> 2/3, b -> 4/3, ab and aB -> 1.
        let fwd = lipschitz_distance(&x, &y).unwrap();
        assert!((fwd.d_cv - (4.0f64 / 3.0).ln()).abs() < 1e-9);
        assert_eq!(x.graph().path_to_string(&fwd.witness.path), "b");
        let bwd = lipschitz_distance(&y, &x).unwrap();
        assert!((bwd.d_cv - 1.5f64.ln()).abs() < 1e-9);
        assert!((sym_distance(&x, &y).unwrap() - 2.0f64.ln()).abs() < 1e-9);
        assert!(fwd.d_cv != bwd.d_cv, "the distance is asymmetric");
    }

    #[test]
    fn sym_distance_is_exactly_symmetric() {
        let x = rose_point(&[0.5, 0.5]);
        let y = barbell_point();
        assert_eq!(sym_distance(&x, &y).unwrap(), sym_distance(&y, &x).unwrap());
    }

    #[test]
    fn rank_mismatch_is_rejected() {
        let x = rose_point(&[0.5, 0.5]);
        let z = rose_point(&[0.4, 0.3, 0.3]);
        assert!(matches!(
            lipschitz_distance(&x, &z),
            Err(OuterSpaceError::RankMismatch { .. })
        ));
    }

    fn random_loop(
        g: &MarkedGraph,
        rng: &mut ChaCha8Rng,
        max_len: usize,
    ) -> Option<EdgePath> {
        let start = rng.gen_range(0..g.n_vertices());
        let len = rng.gen_range(1..=max_len);
        let mut path: EdgePath = Vec::new();
        let mut cur = start;
        for _ in 0..len {
            let choices: Vec<_> = g
                .halves_at(cur)
                .into_iter()
                .filter(|&h| path.last().is_none_or(|&l| h != partner(l)))
                .collect();
            let h = choices[rng.gen_range(0..choices.len())];
            path.push(h);
            cur = g.terminus(h);
        }
        let closed = cur == start;
        let seam_ok = path.len() == 1 || path[0] != partner(*path.last().unwrap());
        (closed && seam_ok).then_some(path)
    }

    /// Property backing the finite computation: no loop beats the
    /// candidate maximum.
    #[test]
    fn candidates_realize_the_maximal_stretch() {
        let from = barbell_point();
        let to = rose_point(&[1.0 / 3.0, 2.0 / 3.0])
            .twisted(
                &FreeAutomorphism::transvection(2, 1, 2, Transvection::Right, false).unwrap(),
            )
            .unwrap();
        let best = lipschitz_distance(&from, &to).unwrap().d_cv.exp();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut accepted = 0;
        while accepted < 1000 {
            let Some(lp) = random_loop(from.graph(), &mut rng, 10) else { continue };
            accepted += 1;
            let s = loop_stretch(&from, &to, &lp).unwrap();
            assert!(s <= best + 1e-12, "loop beats every candidate: {lp:?}");
        }
    }

    fn random_point(rng: &mut ChaCha8Rng, rank: usize) -> OuterSpacePoint {
        let lengths: Vec<f64> = (0..rank).map(|_| rng.gen_range(0.2..1.0)).collect();
        let mut p = rose_point(&lengths);
        for _ in 0..rng.gen_range(0..3usize) {
            let i = rng.gen_range(1..=rank);
            let j = loop {
                let j = rng.gen_range(1..=rank);
                if j != i {
                    break j;
                }
            };
            let side = if rng.gen() { Transvection::Right } else { Transvection::Left };
            let phi =
                FreeAutomorphism::transvection(rank, i, j, side, rng.gen()).unwrap();
            p = p.twisted(&phi).unwrap();
        }
        p
    }

    #[test]
    fn triangle_inequality_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..200 {
            let rank = if trial % 2 == 0 { 2 } else { 3 };
            let x = random_point(&mut rng, rank);
            let y = random_point(&mut rng, rank);
            let z = random_point(&mut rng, rank);
            let xz = lipschitz_distance(&x, &z).unwrap().d_cv;
            let xy = lipschitz_distance(&x, &y).unwrap().d_cv;
            let yz = lipschitz_distance(&y, &z).unwrap().d_cv;
            assert!(xz <= xy + yz + 1e-9);
        }
    }
}
