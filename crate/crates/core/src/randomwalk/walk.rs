//! Random products of step automorphisms.

use rand::Rng;

use crate::freegroup::FreeAutomorphism;

use super::distribution::StepDistribution;

/// The first `n` locations `w_1, ..., w_n` of the walk, where
/// `w_k = g_1 g_2 ... g_k` and the steps are independent draws from
/// `mu`. Deterministic given the rng stream; the caller bounds `n`
/// because locations can grow like `lambda^n` letters.
pub fn sample_walk<R: Rng + ?Sized>(
    mu: &StepDistribution,
    n: usize,
    rng: &mut R,
) -> Vec<FreeAutomorphism> {
    let mut out = Vec::with_capacity(n);
    let mut w = FreeAutomorphism::identity(mu.rank());
    for _ in 0..n {
        w = w.compose(mu.sample(rng)).expect("equal ranks");
        out.push(w.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn aut(rank: usize, images: &[&str]) -> FreeAutomorphism {
        FreeAutomorphism::from_strings(rank, images, false).unwrap()
    }

    #[test]
    fn point_mass_walk_is_the_power_sequence() {
        let phi = aut(2, &["ab", "a"]);
        let mu = StepDistribution::uniform(vec![phi.clone()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let walk = sample_walk(&mu, 3, &mut rng);
        let sq = phi.compose(&phi).unwrap();
        assert_eq!(walk, vec![phi.clone(), sq.clone(), sq.compose(&phi).unwrap()]);
    }

    #[test]
    fn point_mass_at_the_identity_stays_put() {
        let mu = StepDistribution::uniform(vec![FreeAutomorphism::identity(3)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_walk(&mu, 4, &mut rng).iter().all(FreeAutomorphism::is_identity));
    }

    #[test]
    fn fixed_stream_walks_agree_and_prefixes_are_stable() {
        let mu = StepDistribution::uniform(vec![
            aut(2, &["ab", "b"]),
            aut(2, &["aB", "b"]),
            aut(2, &["a", "ba"]),
        ])
        .unwrap();
        let walk = |n: usize| {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            sample_walk(&mu, n, &mut rng)
        };
        assert_eq!(walk(6), walk(6));
        assert_eq!(walk(9)[..6], walk(6)[..]);
    }
}
