//! Finite-support step distributions on the outer automorphism group.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::freegroup::{AutomorphismError, FreeAutomorphism, WordError};

/// Probabilities must sum to one within this tolerance.
pub const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DistributionError {
    #[error("support is empty")]
    EmptySupport,
    #[error("support entry {entry} has probability {p}, which is not positive")]
    NonPositiveProbability { entry: usize, p: f64 },
    #[error("probabilities sum to {total}, not 1")]
    MassNotOne { total: f64 },
    #[error("support entry {entry} has rank {found}, the distribution has rank {expected}")]
    RankMismatch {
        entry: usize,
        expected: usize,
        found: usize,
    },
    #[error("support entry {entry} is not an automorphism: its images are not a basis")]
    NotAnAutomorphism { entry: usize },
    #[error("support entry {entry}: {source}")]
    BadImages {
        entry: usize,
        source: AutomorphismError,
    },
    #[error("support entry {entry} is not renderable as text: {source}")]
    BadWord { entry: usize, source: WordError },
    #[error("bad distribution JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// A probability distribution with finite support, each atom a certified
/// automorphism of the same rank.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    rank: usize,
    support: Vec<(FreeAutomorphism, f64)>,
}

#[derive(Serialize, Deserialize)]
struct DistributionJson {
    rank: usize,
    support: Vec<EntryJson>,
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    images: Vec<String>,
    p: f64,
}

impl StepDistribution {
    pub fn new(
        rank: usize,
        support: Vec<(FreeAutomorphism, f64)>,
    ) -> Result<Self, DistributionError> {
        if support.is_empty() {
            return Err(DistributionError::EmptySupport);
        }
        let mut total = 0.0;
        for (entry, (phi, p)) in support.iter().enumerate() {
            if !(p.is_finite() && *p > 0.0) {
                return Err(DistributionError::NonPositiveProbability { entry, p: *p });
            }
            if phi.rank() != rank {
                return Err(DistributionError::RankMismatch {
                    entry,
                    expected: rank,
                    found: phi.rank(),
                });
            }
            if !phi.verify_basis().is_basis() {
                return Err(DistributionError::NotAnAutomorphism { entry });
            }
            total += p;
        }
        if (total - 1.0).abs() > MASS_TOL {
            return Err(DistributionError::MassNotOne { total });
        }
        Ok(StepDistribution { rank, support })
    }

    /// Equal weight on each listed automorphism.
    pub fn uniform(autos: Vec<FreeAutomorphism>) -> Result<Self, DistributionError> {
        if autos.is_empty() {
            return Err(DistributionError::EmptySupport);
        }
        let rank = autos[0].rank();
        let p = 1.0 / autos.len() as f64;
        StepDistribution::new(rank, autos.into_iter().map(|a| (a, p)).collect())
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn support(&self) -> &[(FreeAutomorphism, f64)] {
        &self.support
    }

    /// The distribution of the inverse step: the same probabilities
    /// attached to the inverses of the support elements, in order.
    pub fn reflect(&self) -> StepDistribution {
        let support = self
            .support
            .iter()
            .map(|(phi, p)| (phi.invert().expect("support entries are bases"), *p))
            .collect();
        StepDistribution {
            rank: self.rank,
            support,
        }
    }

    /// Index of one draw; consumes exactly one uniform variate.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, (_, p)) in self.support.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.support.len() - 1
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &FreeAutomorphism {
        &self.support[self.sample_index(rng)].0
    }

    /// Parses `{"rank":r,"support":[{"images":[...],"p":...},...]}`.
    pub fn from_json(text: &str) -> Result<Self, DistributionError> {
        let raw: DistributionJson = serde_json::from_str(text)?;
        let mut support = Vec::with_capacity(raw.support.len());
        for (entry, e) in raw.support.iter().enumerate() {
            let images: Vec<&str> = e.images.iter().map(String::as_str).collect();
            let phi = FreeAutomorphism::from_strings(raw.rank, &images, false)
                .map_err(|source| DistributionError::BadImages { entry, source })?;
            support.push((phi, e.p));
        }
        StepDistribution::new(raw.rank, support)
    }

    pub fn to_json(&self) -> Result<String, DistributionError> {
        let mut entries = Vec::with_capacity(self.support.len());
        for (entry, (phi, p)) in self.support.iter().enumerate() {
            let mut images = Vec::with_capacity(self.rank);
            for w in phi.images() {
                images.push(
                    w.to_text()
                        .map_err(|source| DistributionError::BadWord { entry, source })?,
                );
            }
            entries.push(EntryJson { images, p: *p });
        }
        let raw = DistributionJson {
            rank: self.rank,
            support: entries,
        };
        Ok(serde_json::to_string_pretty(&raw).expect("plain data serializes"))
    }
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
    fn json_round_trip_preserves_the_distribution() {
        let mu = StepDistribution::new(
            3,
            vec![(aut(3, &["b", "c", "ab"]), 0.25), (aut(3, &["ab", "b", "c"]), 0.75)],
        )
        .unwrap();
        let text = mu.to_json().unwrap();
        assert_eq!(StepDistribution::from_json(&text).unwrap(), mu);
    }

    #[test]
    fn spec_shaped_json_parses() {
        let mu = StepDistribution::from_json(
            r#"{"rank":3, "support":[{"images":["b","c","ab"],"p":0.5},
                                     {"images":["aB","b","c"],"p":0.5}]}"#,
        )
        .unwrap();
        assert_eq!(mu.rank(), 3);
        assert_eq!(mu.support().len(), 2);
    }

    #[test]
    fn invalid_distributions_are_rejected() {
        assert!(matches!(
            StepDistribution::new(2, vec![]),
            Err(DistributionError::EmptySupport)
        ));
        assert!(matches!(
            StepDistribution::new(2, vec![(aut(2, &["ab", "b"]), 0.9)]),
            Err(DistributionError::MassNotOne { .. })
        ));
        assert!(matches!(
            StepDistribution::new(2, vec![(aut(2, &["ab", "b"]), -0.5), (aut(2, &["a", "b"]), 1.5)]),
            Err(DistributionError::NonPositiveProbability { entry: 0, .. })
        ));
        assert!(matches!(
            StepDistribution::new(3, vec![(aut(2, &["ab", "b"]), 1.0)]),
            Err(DistributionError::RankMismatch { entry: 0, expected: 3, found: 2 })
        ));
        let not_basis = FreeAutomorphism::new(
            2,
            vec![
                crate::freegroup::Word::parse("a", false).unwrap(),
                crate::freegroup::Word::parse("a", false).unwrap(),
            ],
        )
        .unwrap();
        assert!(matches!(
            StepDistribution::new(2, vec![(not_basis, 1.0)]),
            Err(DistributionError::NotAnAutomorphism { entry: 0 })
        ));
    }

    #[test]
    fn reflect_is_an_involution_preserving_mass_and_size() {
        let mu = StepDistribution::new(
            2,
            vec![(aut(2, &["ab", "b"]), 0.3), (aut(2, &["a", "ba"]), 0.7)],
        )
        .unwrap();
        let checked = mu.reflect();
        assert_eq!(checked.support().len(), mu.support().len());
        let mass: f64 = checked.support().iter().map(|(_, p)| p).sum();
        assert!((mass - 1.0).abs() < MASS_TOL);
        assert_eq!(checked.support()[0].0, aut(2, &["aB", "b"]));
        assert_eq!(checked.support()[0].1, 0.3);
        assert_eq!(checked.reflect(), mu);
    }

    #[test]
    fn point_mass_reflects_to_the_inverse() {
        let mu = StepDistribution::uniform(vec![aut(2, &["ab", "b"])]).unwrap();
        assert_eq!(mu.reflect().support()[0].0, aut(2, &["aB", "b"]));
    }

    #[test]
    fn sampling_is_deterministic_given_the_stream() {
        let mu = StepDistribution::new(
            2,
            vec![(aut(2, &["ab", "b"]), 0.3), (aut(2, &["a", "ba"]), 0.7)],
        )
        .unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..64).map(|_| mu.sample_index(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6), "different seeds explore differently");
        assert!(draw(5).iter().any(|&i| i == 0) && draw(5).iter().any(|&i| i == 1));
    }
}
