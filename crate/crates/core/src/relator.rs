//! The relator `r = aba⁻¹b⁻¹c`, its ten cyclic conjugates, length-4 pieces,
//! and membership in the normal closure `N` of `r`.

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::word::{Generator, Letter, Word};

/// The defining relator `aba⁻¹b⁻¹c`.
pub fn relator() -> Word {
    crate::word::w("abABc")
}

/// `bab⁻¹a⁻¹`: the value of `c` in the quotient `F₃/N`.
fn c_image() -> Word {
    crate::word::w("baBA")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelatorError {
    #[error("pieces of entries {first} and {second} coincide ({piece})")]
    DuplicatePiece { first: usize, second: usize, piece: Word },
}

/// One cyclic conjugate `s` of `r^±1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelatorEntry {
    /// Display name: `r1` … `r5`, `r1^-1` … `r5^-1`.
    pub name: String,
    pub relator: Word,
    /// The first four letters of `relator`.
    pub piece: Word,
    /// The letter `u*` with `relator = piece · u*⁻¹`.
    pub completion: Letter,
    pub exponent: i8,
    /// `p` with `relator = p⁻¹ · r^exponent · p`.
    pub rotation: Word,
}

#[derive(Debug, Clone, Serialize)]
pub struct RelatorTable {
    entries: Vec<RelatorEntry>,
    #[serde(skip)]
    by_piece: HashMap<[Letter; 4], usize>,
}

/// A length-4 piece located inside a cyclic word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PieceMatch {
    /// Start of the piece in the scanned word; the piece may wrap around.
    pub position: usize,
    pub entry: usize,
}

impl RelatorTable {
    /// Builds the ten entries in the order `r1..r5, r1⁻¹..r5⁻¹`, where `r_{i+1}`
    /// moves the first `i` letters of `r` to the end.
    pub fn build() -> Result<Self, RelatorError> {
        let r = relator();
        let mut entries = Vec::with_capacity(10);
        for exponent in [1i8, -1] {
            for shift in 0..5 {
                let rotation = r.slice(0..shift);
                let positive = r.rotate_left(shift);
                let (relator, name) = if exponent == 1 {
                    (positive, format!("r{}", shift + 1))
                } else {
                    (positive.inverse(), format!("r{}^-1", shift + 1))
                };
                let piece = relator.slice(0..4);
                let completion = relator.letters()[4].inverse();
                entries.push(RelatorEntry { name, relator, piece, completion, exponent, rotation });
            }
        }

        let mut by_piece = HashMap::new();
        for (index, entry) in entries.iter().enumerate() {
            let key: [Letter; 4] = entry.piece.letters().try_into().expect("piece has four letters");
            if let Some(&first) = by_piece.get(&key) {
                return Err(RelatorError::DuplicatePiece { first, second: index, piece: entry.piece.clone() });
            }
            by_piece.insert(key, index);
        }
        Ok(RelatorTable { entries, by_piece })
    }

    /// Shared table, built on first use.
    pub fn standard() -> &'static RelatorTable {
        static TABLE: OnceLock<RelatorTable> = OnceLock::new();
        TABLE.get_or_init(|| RelatorTable::build().expect("relator pieces are pairwise distinct"))
    }

    pub fn entries(&self) -> &[RelatorEntry] {
        &self.entries
    }

    pub fn entry(&self, index: usize) -> &RelatorEntry {
        &self.entries[index]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// First length-4 cyclic subword of `core` that is a piece, scanning start
    /// positions `0..|core|` over `core · core`.
    ///
    /// `core` should be cyclically reduced. Each start position matches at most
    /// one entry because the pieces are distinct.
    pub fn find_piece(&self, core: &Word) -> Option<PieceMatch> {
        let letters = core.letters();
        let n = letters.len();
        if n < 4 {
            return None;
        }
        (0..n).find_map(|position| {
            let window: [Letter; 4] = std::array::from_fn(|i| letters[(position + i) % n]);
            self.by_piece.get(&window).map(|&entry| PieceMatch { position, entry })
        })
    }
}

/// Image of `w` in the free group on `a, b` obtained by killing `r`
/// (`c ↦ bab⁻¹a⁻¹`), freely reduced.
pub fn project_to_f2(w: &Word) -> Word {
    let c = c_image();
    let c_inv = c.inverse();
    let images: Vec<Word> = w
        .letters()
        .iter()
        .map(|&letter| match (letter.generator, letter.inverted) {
            (Generator::C, false) => c.clone(),
            (Generator::C, true) => c_inv.clone(),
            _ => Word::from_letter(letter),
        })
        .collect();
    Word::product(&images)
}

/// Membership in the normal closure of `r`.
pub fn is_in_n(w: &Word) -> bool {
    project_to_f2(w).is_empty()
}

/// Conjugacy of the images of `u` and `v` in `F₃/N`, i.e. of their
/// projections to the free group on `a, b`.
///
/// Closed curves on the grid complex that are freely homotopic in the
/// punctured plane read words related this way.
pub fn conjugate_modulo_n(u: &Word, v: &Word) -> bool {
    project_to_f2(u).is_conjugate_to(&project_to_f2(v))
}
