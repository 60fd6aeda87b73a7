//! Bounded exhaustive search for the combinatorial area of short words, and
//! seeded sampling of elements of `N`.
//!
//! The search walks freely reduced words. A move inserts one of the ten
//! relators of [`RelatorTable`] at some position and freely reduces; a word
//! has area at most `d` if the identity is reachable in `d` moves. Iterative
//! deepening starts at an admissible lower bound and stops at the first depth
//! that succeeds, so the reported `best` is the fewest moves found within the
//! caps.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::relator::{is_in_n, relator, RelatorTable};
use crate::word::{Generator, Letter, Word};

pub const DEFAULT_D_MAX: usize = 4;

/// `2·|w| + 10`.
pub fn default_len_cap(w: &Word) -> usize {
    2 * w.free_reduce().len() + 10
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{word} is not in the normal closure of abABc")]
    NotInNormalClosure { word: Word },
    #[error("length cap {len_cap} is below the word length {len}")]
    CapBelowLength { len_cap: usize, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleStatus {
    /// `best` meets the `|φ|` lower bound.
    Exact,
    /// A decomposition was found but may not be minimal.
    UpperBoundOnly,
    /// No path to the identity within the caps.
    NotFound,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleResult {
    pub word: Word,
    pub best: Option<usize>,
    pub status: OracleStatus,
    pub explored: u64,
    pub d_max: usize,
    pub len_cap: usize,
}

/// Each move changes `φ` by exactly one.
fn lower_bound(w: &Word) -> usize {
    w.phi().unsigned_abs() as usize
}

struct Search<'a> {
    table: &'a RelatorTable,
    len_cap: usize,
    explored: u64,
    /// Largest remaining budget with which a word was exhausted without success.
    failed: HashMap<Word, usize>,
}

impl Search<'_> {
    /// One move suffices exactly when `w` is a conjugate of `r^±1`, i.e. its
    /// cyclic core is one of the ten relators.
    fn is_single_conjugate(&self, w: &Word) -> bool {
        let core = w.cyclic_reduce().core;
        core.len() == 5 && self.table.entries().iter().any(|e| e.relator == core)
    }

    fn reaches_identity(&mut self, w: &Word, budget: usize) -> bool {
        if w.is_empty() {
            return true;
        }
        if budget == 0 || lower_bound(w) > budget {
            return false;
        }
        if budget == 1 {
            self.explored += 1;
            return self.is_single_conjugate(w);
        }
        if self.failed.get(w).is_some_and(|&seen| seen >= budget) {
            return false;
        }
        self.explored += 1;

        let phi = w.phi();
        let letters = w.letters();
        let table = self.table;
        for position in 0..=letters.len() {
            for entry in table.entries() {
                if (phi + entry.exponent as i64).unsigned_abs() as usize > budget - 1 {
                    continue;
                }
                let next = insert_reduced(letters, position, entry.relator.letters());
                if next.len() > self.len_cap {
                    continue;
                }
                if self.reaches_identity(&next, budget - 1) {
                    return true;
                }
            }
        }
        self.failed.insert(w.clone(), budget);
        false
    }
}

fn insert_reduced(letters: &[Letter], position: usize, insert: &[Letter]) -> Word {
    let mut spliced = Vec::with_capacity(letters.len() + insert.len());
    spliced.extend_from_slice(&letters[..position]);
    spliced.extend_from_slice(insert);
    spliced.extend_from_slice(&letters[position..]);
    Word::new(spliced).free_reduce()
}

/// Fewest relator insertions that reduce `w` to the identity, searching up to
/// `d_max` moves with every intermediate word no longer than `len_cap`.
pub fn exact_area_bounded(w: &Word, d_max: usize, len_cap: usize) -> Result<OracleResult, OracleError> {
    if !is_in_n(w) {
        return Err(OracleError::NotInNormalClosure { word: w.clone() });
    }
    let word = w.free_reduce();
    if len_cap < word.len() {
        return Err(OracleError::CapBelowLength { len_cap, len: word.len() });
    }
    let mut search = Search { table: RelatorTable::standard(), len_cap, explored: 0, failed: HashMap::new() };

    let phi = word.phi().unsigned_abs() as usize;
    let best = (lower_bound(&word)..=d_max).find(|&depth| search.reaches_identity(&word, depth));
    let status = match best {
        None => OracleStatus::NotFound,
        Some(d) if d == phi => OracleStatus::Exact,
        Some(_) => OracleStatus::UpperBoundOnly,
    };
    Ok(OracleResult { word, best, status, explored: search.explored, d_max, len_cap })
}

/// A uniformly random freely reduced word of the given length.
pub fn random_reduced_word<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Word {
    let mut letters: Vec<Letter> = Vec::with_capacity(len);
    while letters.len() < len {
        let candidate = Letter::ALL[rng.gen_range(0..6)];
        if letters.last() != Some(&candidate.inverse()) {
            letters.push(candidate);
        }
    }
    Word::new(letters)
}

/// A random cyclically reduced word with zero exponent sums in `a` and `b`
/// and at most `max_ab` letters `a^±1, b^±1`: a random word closed up by
/// powers of `b` and `a`.
pub fn random_closed_word<R: Rng + ?Sized>(rng: &mut R, max_ab: usize) -> Word {
    loop {
        let len = rng.gen_range(1..=max_ab + 4);
        let base = random_reduced_word(rng, len);
        let (b_sum, a_sum) = base.abelianize_ab();
        let close_b = Word::from_letter(Letter::new(Generator::B, b_sum > 0)).pow(b_sum.abs());
        let close_a = Word::from_letter(Letter::new(Generator::A, a_sum > 0)).pow(a_sum.abs());
        let word = Word::product([&base, &close_b, &close_a]).cyclic_reduce().core;
        if word.ab_length() <= max_ab {
            return word;
        }
    }
}

/// A product of `k ∈ 1..=k_max` conjugates `g r^±1 g⁻¹` with `|g| ≤ g_max`,
/// freely reduced. Returns the word and the number of factors drawn.
pub fn sample_element_of_n<R: Rng + ?Sized>(rng: &mut R, k_max: usize, g_max: usize) -> (Word, usize) {
    let k = rng.gen_range(1..=k_max.max(1));
    let r = relator();
    let factors: Vec<Word> = (0..k)
        .map(|_| {
            let g_len = rng.gen_range(0..=g_max);
            let g = random_reduced_word(rng, g_len);
            let exponent = if rng.gen_bool(0.5) { 1 } else { -1 };
            r.pow(exponent).conjugate_by(&g)
        })
        .collect();
    (Word::product(&factors), k)
}

/// Deterministic per `seed`.
pub fn random_element_of_n(seed: u64, k_max: usize, g_max: usize) -> Word {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_element_of_n(&mut rng, k_max, g_max).0
}
