//! Free-group arithmetic over the alphabet `{a, b, c}` and their inverses.
//!
//! Words are written with lowercase letters for generators and uppercase
//! letters for inverses, so `abABc` is `a b a⁻¹ b⁻¹ c`. Whitespace is ignored
//! when parsing and the identity prints as `1`.

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("invalid character {ch:?} at offset {offset} (expected one of a, A, b, B, c, C)")]
    InvalidCharacter { ch: char, offset: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Generator {
    A,
    B,
    C,
}

/// A generator or its inverse.
///
/// The derived order is `a < A < b < B < c < C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub generator: Generator,
    pub inverted: bool,
}

impl Letter {
    pub const ALL: [Letter; 6] = [
        Letter::new(Generator::A, false),
        Letter::new(Generator::A, true),
        Letter::new(Generator::B, false),
        Letter::new(Generator::B, true),
        Letter::new(Generator::C, false),
        Letter::new(Generator::C, true),
    ];

    pub const fn new(generator: Generator, inverted: bool) -> Self {
        Letter { generator, inverted }
    }

    pub const fn inverse(self) -> Self {
        Letter { generator: self.generator, inverted: !self.inverted }
    }

    /// `+1` for a generator, `-1` for an inverse.
    pub const fn sign(self) -> i64 {
        if self.inverted {
            -1
        } else {
            1
        }
    }

    pub fn is_ab(self) -> bool {
        self.generator != Generator::C
    }

    pub fn to_char(self) -> char {
        let ch = match self.generator {
            Generator::A => 'a',
            Generator::B => 'b',
            Generator::C => 'c',
        };
        if self.inverted {
            ch.to_ascii_uppercase()
        } else {
            ch
        }
    }

    pub fn from_char(ch: char) -> Option<Self> {
        let generator = match ch.to_ascii_lowercase() {
            'a' => Generator::A,
            'b' => Generator::B,
            'c' => Generator::C,
            _ => return None,
        };
        Some(Letter::new(generator, ch.is_ascii_uppercase()))
    }
}

impl Serialize for Letter {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_char(self.to_char())
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// A finite sequence of letters.
///
/// `reduced` caches whether the sequence is freely reduced; it is computed on
/// construction and never goes stale because words are immutable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    letters: Vec<Letter>,
    reduced: bool,
}

/// A cyclically reduced word together with the conjugator that recovers the
/// original: `original = conjugator · core · conjugator⁻¹` in the free group.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CyclicWord {
    pub core: Word,
    pub conjugator: Word,
}

fn is_freely_reduced(letters: &[Letter]) -> bool {
    letters.windows(2).all(|pair| pair[0] != pair[1].inverse())
}

/// Appends `letters` onto a reduced stack, cancelling as it goes.
fn push_reduced(stack: &mut Vec<Letter>, letters: &[Letter]) {
    for &letter in letters {
        if stack.last() == Some(&letter.inverse()) {
            stack.pop();
        } else {
            stack.push(letter);
        }
    }
}

impl Word {
    pub fn identity() -> Self {
        Word { letters: Vec::new(), reduced: true }
    }

    pub fn new(letters: Vec<Letter>) -> Self {
        let reduced = is_freely_reduced(&letters);
        Word { letters, reduced }
    }

    pub fn from_letter(letter: Letter) -> Self {
        Word { letters: vec![letter], reduced: true }
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

    pub fn is_reduced(&self) -> bool {
        self.reduced
    }

    pub fn inverse(&self) -> Word {
        let letters = self.letters.iter().rev().map(|l| l.inverse()).collect();
        Word { letters, reduced: self.reduced }
    }

    /// Juxtaposition without cancellation.
    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = Vec::with_capacity(self.len() + other.len());
        letters.extend_from_slice(&self.letters);
        letters.extend_from_slice(&other.letters);
        Word::new(letters)
    }

    /// Freely reduced product of a sequence of words.
    pub fn product<'a, I>(words: I) -> Word
    where
        I: IntoIterator<Item = &'a Word>,
    {
        let mut stack = Vec::new();
        for w in words {
            push_reduced(&mut stack, &w.letters);
        }
        Word { letters: stack, reduced: true }
    }

    pub fn pow(&self, exponent: i64) -> Word {
        let base = if exponent < 0 { self.inverse() } else { self.clone() };
        let copies = vec![&base; exponent.unsigned_abs() as usize];
        Word::product(copies)
    }

    /// `g · self · g⁻¹`, freely reduced.
    pub fn conjugate_by(&self, g: &Word) -> Word {
        Word::product([g, self, &g.inverse()])
    }

    /// Cyclic rotation moving the first `k` letters to the end.
    pub fn rotate_left(&self, k: usize) -> Word {
        if self.is_empty() {
            return self.clone();
        }
        let k = k % self.len();
        let mut letters = Vec::with_capacity(self.len());
        letters.extend_from_slice(&self.letters[k..]);
        letters.extend_from_slice(&self.letters[..k]);
        Word::new(letters)
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Word {
        Word::new(self.letters[range].to_vec())
    }

    pub fn free_reduce(&self) -> Word {
        if self.reduced {
            return self.clone();
        }
        let mut stack = Vec::with_capacity(self.len());
        push_reduced(&mut stack, &self.letters);
        Word { letters: stack, reduced: true }
    }

    pub fn cyclic_reduce(&self) -> CyclicWord {
        let reduced = self.free_reduce();
        let n = reduced.len();
        let mut k = 0;
        while 2 * k + 1 < n && reduced.letters[k] == reduced.letters[n - 1 - k].inverse() {
            k += 1;
        }
        CyclicWord {
            core: Word::new(reduced.letters[k..n - k].to_vec()),
            conjugator: Word::new(reduced.letters[..k].to_vec()),
        }
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        self.reduced
            && match (self.letters.first(), self.letters.last()) {
                (Some(&first), Some(&last)) => self.len() == 1 || first != last.inverse(),
                _ => true,
            }
    }

    /// Number of `a^±1, b^±1` letters in the cyclic reduction.
    pub fn ab_length(&self) -> usize {
        self.cyclic_reduce().core.letters.iter().filter(|l| l.is_ab()).count()
    }

    /// Exponent sum of `c`.
    pub fn phi(&self) -> i64 {
        self.exponent_sum(Generator::C)
    }

    pub fn exponent_sum(&self, generator: Generator) -> i64 {
        self.letters.iter().filter(|l| l.generator == generator).map(|l| l.sign()).sum()
    }

    /// Image in ℤ² under `a ↦ (0,1)`, `b ↦ (1,0)`, `c ↦ (0,0)`.
    pub fn abelianize_ab(&self) -> (i64, i64) {
        (self.exponent_sum(Generator::B), self.exponent_sum(Generator::A))
    }

    /// Lexicographically least cyclic rotation (order `a < A < b < B < c < C`).
    pub fn least_rotation(&self) -> Word {
        (0..self.len().max(1)).map(|k| self.rotate_left(k)).min_by(|x, y| x.letters.cmp(&y.letters)).unwrap_or_default()
    }

    /// True when `other` is a cyclic rotation of `self`.
    pub fn is_rotation_of(&self, other: &Word) -> bool {
        if self.len() != other.len() {
            return false;
        }
        if self.is_empty() {
            return true;
        }
        let doubled: Vec<Letter> = self.letters.iter().chain(&self.letters).copied().collect();
        doubled.windows(other.len()).any(|w| w == other.letters.as_slice())
    }

    /// Equality of conjugacy classes, decided on cyclic cores.
    pub fn is_conjugate_to(&self, other: &Word) -> bool {
        self.cyclic_reduce().core.is_rotation_of(&other.cyclic_reduce().core)
    }
}

impl Default for Word {
    fn default() -> Self {
        Word::identity()
    }
}

impl CyclicWord {
    /// `conjugator · core · conjugator⁻¹`, freely reduced.
    pub fn recombine(&self) -> Word {
        self.core.conjugate_by(&self.conjugator)
    }
}

impl Mul for &Word {
    type Output = Word;

    fn mul(self, rhs: &Word) -> Word {
        Word::product([self, rhs])
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        for letter in &self.letters {
            write!(f, "{letter}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // "1" is how the identity prints; accept it back.
        if s.trim() == "1" {
            return Ok(Word::identity());
        }
        let mut letters = Vec::with_capacity(s.len());
        for (offset, ch) in s.char_indices() {
            if ch.is_whitespace() {
                continue;
            }
            match Letter::from_char(ch) {
                Some(letter) => letters.push(letter),
                None => return Err(WordError::InvalidCharacter { ch, offset }),
            }
        }
        Ok(Word::new(letters))
    }
}

impl From<Vec<Letter>> for Word {
    fn from(letters: Vec<Letter>) -> Self {
        Word::new(letters)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses a word, panicking on malformed input. Intended for literals.
pub fn w(text: &str) -> Word {
    text.parse().unwrap_or_else(|e| panic!("bad word literal {text:?}: {e}"))
}
