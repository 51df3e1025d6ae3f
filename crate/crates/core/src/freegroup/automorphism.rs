use super::stallings::{fold_wedge_basis_check, invert_images, BasisCheck};
use super::word::{Letter, Word};
use super::AutomorphismError;
use serde::{Deserialize, Serialize};
use std::fmt;

/// An endomorphism of the rank-`rank` free group given by basis images.
/// Most call sites require an actual automorphism; `is_basis` certifies
/// that and `invert` fails with a witness otherwise.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawAutomorphism", into = "RawAutomorphism")]
pub struct FreeAutomorphism {
    rank: usize,
    images: Vec<Word>,
}

/// Wire form: `{"rank": 3, "images": ["b", "c", "ab"]}`.
#[derive(Serialize, Deserialize)]
struct RawAutomorphism {
    rank: usize,
    images: Vec<Word>,
}

impl TryFrom<RawAutomorphism> for FreeAutomorphism {
    type Error = AutomorphismError;
    fn try_from(raw: RawAutomorphism) -> Result<Self, Self::Error> {
        FreeAutomorphism::new(raw.rank, raw.images)
    }
}

impl From<FreeAutomorphism> for RawAutomorphism {
    fn from(a: FreeAutomorphism) -> Self {
        RawAutomorphism { rank: a.rank, images: a.images }
    }
}

/// Which side a transvection multiplies on: `Right` sends `a_i` to
/// `a_i a_j`, `Left` to `a_j a_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transvection {
    Left,
    Right,
}

impl FreeAutomorphism {
    pub fn new(rank: usize, images: Vec<Word>) -> Result<Self, AutomorphismError> {
        if images.len() != rank {
            return Err(AutomorphismError::ImageCountMismatch { expected: rank, got: images.len() });
        }
        for w in &images {
            w.check_rank(rank)?;
        }
        Ok(FreeAutomorphism { rank, images })
    }

    /// Parses images from text, rejecting unreduced words unless
    /// `auto_reduce` is set.
    pub fn from_strings(rank: usize, images: &[&str], auto_reduce: bool) -> Result<Self, AutomorphismError> {
        let mut ws = Vec::with_capacity(images.len());
        for (index, s) in images.iter().enumerate() {
            let w = Word::parse(s, auto_reduce).map_err(|e| match e {
                super::WordError::NotReduced { .. } => AutomorphismError::UnreducedImage { index },
                other => AutomorphismError::Word(other),
            })?;
            ws.push(w);
        }
        Self::new(rank, ws)
    }

    pub fn identity(rank: usize) -> Self {
        let images = (1..=rank as Letter).map(|g| Word::single(g).unwrap()).collect();
        FreeAutomorphism { rank, images }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn image(&self, generator: usize) -> &Word {
        &self.images[generator - 1]
    }

    /// Total letter count over all images.
    pub fn size(&self) -> usize {
        self.images.iter().map(Word::len).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.images
            .iter()
            .enumerate()
            .all(|(i, w)| w.letters() == [(i + 1) as Letter])
    }

    /// Homomorphic extension to a word, freely reduced.
    pub fn apply(&self, w: &Word) -> Word {
        let mut out: Vec<Letter> = Vec::new();
        for &l in w.letters() {
            let img = &self.images[(l.unsigned_abs() as usize) - 1];
            if l > 0 {
                for &m in img.letters() {
                    if out.last() == Some(&-m) {
                        out.pop();
                    } else {
                        out.push(m);
                    }
                }
            } else {
                for &m in img.letters().iter().rev() {
                    let m = -m;
                    if out.last() == Some(&-m) {
                        out.pop();
                    } else {
                        out.push(m);
                    }
                }
            }
        }
        Word::from_reduced(out).expect("reduction preserved")
    }

    /// Composition `self . other`, acting as `x -> self(other(x))`.
    pub fn compose(&self, other: &FreeAutomorphism) -> Result<Self, AutomorphismError> {
        if self.rank != other.rank {
            return Err(AutomorphismError::RankMismatch { left: self.rank, right: other.rank });
        }
        let images = other.images.iter().map(|w| self.apply(w)).collect();
        Ok(FreeAutomorphism { rank: self.rank, images })
    }

    /// Fold-based basis certificate for an arbitrary image tuple.
    pub fn is_basis(rank: usize, words: &[Word]) -> Result<BasisCheck, AutomorphismError> {
        if words.len() != rank {
            return Err(AutomorphismError::ImageCountMismatch { expected: rank, got: words.len() });
        }
        for w in words {
            w.check_rank(rank)?;
        }
        Ok(fold_wedge_basis_check(rank, words))
    }

    /// Certifies invertibility of this endomorphism's image tuple.
    pub fn verify_basis(&self) -> BasisCheck {
        fold_wedge_basis_check(self.rank, &self.images)
    }

    /// Inverse automorphism through Stallings fold backtracking. The result
    /// is verified by composition before being returned.
    pub fn invert(&self) -> Result<Self, AutomorphismError> {
        match invert_images(self.rank, &self.images) {
            Some(images) => {
                let inv = FreeAutomorphism { rank: self.rank, images };
                debug_assert!(
                    self.compose(&inv).expect("same rank").is_identity()
                        && inv.compose(self).expect("same rank").is_identity(),
                    "fold backtrace must produce the two-sided inverse"
                );
                Ok(inv)
            }
            None => match self.verify_basis() {
                BasisCheck::Basis => unreachable!("basis tuples are invertible"),
                BasisCheck::NotBasis(witness) => Err(AutomorphismError::NotInvertible { witness }),
            },
        }
    }

    /// `a_i -> a_i a_j` (Right) or `a_j a_i` (Left); other generators fixed.
    /// `inverse` multiplies by `a_j^-1` instead.
    pub fn transvection(
        rank: usize,
        i: usize,
        j: usize,
        side: Transvection,
        inverse: bool,
    ) -> Result<Self, AutomorphismError> {
        assert!(i != j && i >= 1 && j >= 1 && i <= rank && j <= rank, "transvection needs distinct generators in range");
        let mut images: Vec<Word> = (1..=rank as Letter).map(|g| Word::single(g).unwrap()).collect();
        let aj = if inverse { -(j as Letter) } else { j as Letter };
        let letters = match side {
            Transvection::Right => vec![i as Letter, aj],
            Transvection::Left => vec![aj, i as Letter],
        };
        images[i - 1] = Word::from_reduced(letters).unwrap();
        Self::new(rank, images)
    }

    /// `a_i -> a_i^-1`, other generators fixed.
    pub fn inversion(rank: usize, i: usize) -> Result<Self, AutomorphismError> {
        assert!(i >= 1 && i <= rank);
        let mut images: Vec<Word> = (1..=rank as Letter).map(|g| Word::single(g).unwrap()).collect();
        images[i - 1] = Word::single(-(i as Letter)).unwrap();
        Self::new(rank, images)
    }

    /// Conjugation `x -> w x w^-1`.
    pub fn inner(rank: usize, w: &Word) -> Result<Self, AutomorphismError> {
        w.check_rank(rank)?;
        let images = (1..=rank as Letter)
            .map(|g| Word::single(g).unwrap().conjugate(w))
            .collect();
        Ok(FreeAutomorphism { rank, images })
    }

    /// Decides whether this automorphism is a conjugation, returning the
    /// conjugator. Exact: solves `images[0] = w a_1 w^-1` for the candidate
    /// set `w = u a_1^k` and checks the remaining images for each k in the
    /// finite range allowed by image lengths.
    pub fn inner_witness(&self) -> Option<Word> {
        if self.rank == 0 {
            return Some(Word::identity());
        }
        let first = &self.images[0];
        let (u, core) = first.cyclic_reduce();
        if core.letters() != [1 as Letter] {
            return None;
        }
        let bound = self.images.iter().map(Word::len).max().unwrap_or(0) / 2 + 2;
        let a1 = Word::single(1).unwrap();
        for k in -(bound as i64)..=(bound as i64) {
            let mut w = u.clone();
            let step = if k >= 0 { a1.clone() } else { a1.inverse() };
            for _ in 0..k.abs() {
                w = w.concat(&step);
            }
            let ok = (1..=self.rank).all(|g| {
                let gen = Word::single(g as Letter).unwrap();
                self.images[g - 1] == gen.conjugate(&w)
            });
            if ok {
                return Some(w);
            }
        }
        None
    }

    /// Equality in the outer automorphism group: `self = conj . other`.
    pub fn equal_outer(&self, other: &FreeAutomorphism) -> Result<bool, AutomorphismError> {
        if self.rank != other.rank {
            return Err(AutomorphismError::RankMismatch { left: self.rank, right: other.rank });
        }
        let diff = self.compose(&other.invert()?)?;
        Ok(diff.inner_witness().is_some())
    }

    /// Canonical representative of the outer class for reporting: greedy
    /// descent over single-letter conjugations, minimizing total image
    /// length and breaking ties by the lexicographic order of image tuples.
    /// Comparisons should use `equal_outer`, which is exact.
    pub fn conjugation_normalized(&self) -> Self {
        let key = |a: &FreeAutomorphism| -> (usize, Vec<Vec<Letter>>) {
            (a.size(), a.images.iter().map(|w| w.letters().to_vec()).collect())
        };
        let mut best = self.clone();
        let mut best_key = key(&best);
        let mut improved = true;
        let mut rounds = 0usize;
        while improved && rounds < 10_000 {
            improved = false;
            rounds += 1;
            for g in 1..=self.rank as Letter {
                for sign in [1, -1] {
                    let w = Word::single(sign * g).unwrap();
                    let conj = FreeAutomorphism {
                        rank: self.rank,
                        images: best.images.iter().map(|im| im.conjugate(&w)).collect(),
                    };
                    let k = key(&conj);
                    if k < best_key {
                        best = conj;
                        best_key = k;
                        improved = true;
                    }
                }
            }
        }
        best
    }
}

impl fmt::Debug for FreeAutomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FreeAutomorphism(rank {}: ", self.rank)?;
        for (i, w) in self.images.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let gen = Word::single((i + 1) as Letter).unwrap();
            write!(f, "{gen}->{w}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for FreeAutomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.images.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let gen = Word::single((i + 1) as Letter).unwrap();
            write!(f, "{gen} -> {w}")?;
        }
        Ok(())
    }
}
