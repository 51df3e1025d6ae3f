use serde::de::Error as DeError;
use serde::ser::Error as SerError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use thiserror::Error;

/// Signed generator index: `k > 0` is generator `k`, `k < 0` its inverse.
pub type Letter = i32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("invalid character {0:?}, expected ascii letters a-z or A-Z")]
    ParseError(char),
    #[error("letter {letter} outside rank {rank}")]
    LetterOutOfRange { letter: Letter, rank: usize },
    #[error("zero is not a valid letter")]
    ZeroLetter,
    #[error("word is not freely reduced at position {at}")]
    NotReduced { at: usize },
    #[error("rank {0} exceeds 26, text form only covers a..z")]
    RankTooLargeForText(usize),
}

/// A freely reduced word. The invariant (no adjacent `x x^-1`) is enforced
/// by every constructor, so equality of words is equality in the group.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    letters: Vec<Letter>,
}

/// Free reduction of a letter sequence, in place via a stack.
pub(crate) fn reduce_letters(input: impl IntoIterator<Item = Letter>) -> Vec<Letter> {
    let mut stack: Vec<Letter> = Vec::new();
    for l in input {
        debug_assert!(l != 0);
        if stack.last() == Some(&-l) {
            stack.pop();
        } else {
            stack.push(l);
        }
    }
    stack
}

impl Word {
    pub fn identity() -> Self {
        Word { letters: Vec::new() }
    }

    /// Builds a word, freely reducing the input. Rejects zero letters.
    pub fn new(letters: impl IntoIterator<Item = Letter>) -> Result<Self, WordError> {
        let mut raw = Vec::new();
        for l in letters {
            if l == 0 {
                return Err(WordError::ZeroLetter);
            }
            raw.push(l);
        }
        Ok(Word { letters: reduce_letters(raw) })
    }

    /// Builds a word from letters that must already be reduced.
    pub fn from_reduced(letters: Vec<Letter>) -> Result<Self, WordError> {
        for (i, &l) in letters.iter().enumerate() {
            if l == 0 {
                return Err(WordError::ZeroLetter);
            }
            if i > 0 && letters[i - 1] == -l {
                return Err(WordError::NotReduced { at: i });
            }
        }
        Ok(Word { letters })
    }

    pub fn single(letter: Letter) -> Result<Self, WordError> {
        if letter == 0 {
            return Err(WordError::ZeroLetter);
        }
        Ok(Word { letters: vec![letter] })
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Largest generator index used, 0 for the identity.
    pub fn max_generator(&self) -> usize {
        self.letters.iter().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0)
    }

    pub fn check_rank(&self, rank: usize) -> Result<(), WordError> {
        for &l in &self.letters {
            if l.unsigned_abs() as usize > rank {
                return Err(WordError::LetterOutOfRange { letter: l, rank });
            }
        }
        Ok(())
    }

    pub fn inverse(&self) -> Word {
        Word { letters: self.letters.iter().rev().map(|&l| -l).collect() }
    }

    /// Reduced product `self * other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut out = self.letters.clone();
        for &l in &other.letters {
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word { letters: out }
    }

    /// Writes `self = u c u^-1` with `c` cyclically reduced; returns `(u, c)`.
    pub fn cyclic_reduce(&self) -> (Word, Word) {
        let mut lo = 0usize;
        let mut hi = self.letters.len();
        while hi - lo >= 2 && self.letters[lo] == -self.letters[hi - 1] {
            lo += 1;
            hi -= 1;
        }
        let u = Word { letters: self.letters[..lo].to_vec() };
        let c = Word { letters: self.letters[lo..hi].to_vec() };
        (u, c)
    }

    pub fn conjugate(&self, by: &Word) -> Word {
        by.concat(self).concat(&by.inverse())
    }

    /// Parses text form; the result is required to be freely reduced unless
    /// `auto_reduce` is set.
    pub fn parse(s: &str, auto_reduce: bool) -> Result<Self, WordError> {
        let mut letters = Vec::with_capacity(s.len());
        for ch in s.chars() {
            let l = match ch {
                'a'..='z' => (ch as i32) - ('a' as i32) + 1,
                'A'..='Z' => -((ch as i32) - ('A' as i32) + 1),
                _ => return Err(WordError::ParseError(ch)),
            };
            letters.push(l);
        }
        if auto_reduce {
            Ok(Word { letters: reduce_letters(letters) })
        } else {
            Word::from_reduced(letters)
        }
    }

    /// Text form. Empty string is the identity.
    pub fn to_text(&self) -> Result<String, WordError> {
        let mut s = String::with_capacity(self.letters.len());
        for &l in &self.letters {
            let idx = l.unsigned_abs();
            if idx > 26 {
                return Err(WordError::RankTooLargeForText(idx as usize));
            }
            let ch = if l > 0 {
                (b'a' + (idx as u8) - 1) as char
            } else {
                (b'A' + (idx as u8) - 1) as char
            };
            s.push(ch);
        }
        Ok(s)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_text() {
            Ok(s) => f.write_str(&s),
            Err(_) => {
                for (i, l) in self.letters.iter().enumerate() {
                    if i > 0 {
                        f.write_str(".")?;
                    }
                    write!(f, "{l}")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let text = self.to_text().map_err(S::Error::custom)?;
        serializer.serialize_str(&text)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Word::parse(&s, false).map_err(D::Error::custom)
    }
}
