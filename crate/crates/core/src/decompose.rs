//! Explicit area decompositions for elements of the normal closure `N`.
//!
//! The decomposer repeatedly cyclically reduces the current word, locates a
//! length-4 piece `u` of some `s ∈ R`, splits off the conjugate of `s` that
//! accounts for it and continues with `u` replaced by the single completion
//! letter `u*`. Every step shortens the word by at least three letters and the
//! `(a,b)`-length by at least two, so the number of factors never exceeds half
//! the `(a,b)`-length of the input.
//!
//! Conjugators are tracked exactly: at each point the input equals
//! `f₁ ⋯ f_k · h w h⁻¹` where `f_i` are the factors emitted so far, `w` is the
//! word still to be decomposed and `h` is the outer conjugator picked up from
//! cyclic reductions and rotations.

use serde::Serialize;
use thiserror::Error;

use crate::relator::{is_in_n, relator, RelatorTable};
use crate::word::Word;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecomposeError {
    #[error("{word} is not in the normal closure of abABc")]
    NotInNormalClosure { word: Word },
    #[error("no length-4 piece in the nonempty cyclically reduced word {word}")]
    PieceNotFound { word: Word },
    #[error("step from {before} to {after} did not shorten the word enough")]
    NoProgress { before: Word, after: Word },
    #[error("certificate for {word} failed self-check: {reason}")]
    SelfCheckFailed { word: Word, reason: &'static str },
}

/// One factor `g · r^ε · g⁻¹`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Factor {
    pub conjugator: Word,
    pub exponent: i8,
}

impl Factor {
    pub fn new(conjugator: Word, exponent: i8) -> Self {
        Factor { conjugator, exponent }
    }

    pub fn expand(&self) -> Word {
        relator().pow(self.exponent as i64).conjugate_by(&self.conjugator)
    }
}

/// An ordered list of factors whose product is the target word.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
#[serde(transparent)]
pub struct Decomposition {
    pub factors: Vec<Factor>,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Freely reduced product of the factors.
    pub fn product(&self) -> Word {
        let expanded: Vec<Word> = self.factors.iter().map(Factor::expand).collect();
        Word::product(&expanded)
    }
}

/// One rewriting step of the decomposer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Step {
    /// Cyclically reduced word that was scanned.
    pub before: Word,
    pub piece: Word,
    pub position: usize,
    pub entry: usize,
    /// Freely reduced word left after replacing the piece.
    pub after: Word,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AreaCertificate {
    pub word: Word,
    #[serde(rename = "factors")]
    pub decomposition: Decomposition,
    #[serde(rename = "d")]
    pub upper: usize,
    pub lower: usize,
    pub ab_len: usize,
    pub exact: bool,
    pub trace: Vec<Step>,
}

/// Decomposes `w ∈ N` into conjugates of `r^±1`.
pub fn decompose(w: &Word) -> Result<Decomposition, DecomposeError> {
    decompose_traced(w).map(|(decomposition, _)| decomposition)
}

/// Like [`decompose`], also returning the rewriting trace.
pub fn decompose_traced(w: &Word) -> Result<(Decomposition, Vec<Step>), DecomposeError> {
    if !is_in_n(w) {
        return Err(DecomposeError::NotInNormalClosure { word: w.clone() });
    }
    let table = RelatorTable::standard();
    let mut factors = Vec::new();
    let mut trace = Vec::new();
    let mut outer = Word::identity();
    let mut current = w.free_reduce();

    while !current.is_empty() {
        let cyclic = current.cyclic_reduce();
        outer = &outer * &cyclic.conjugator;
        let mut core = cyclic.core;
        let before = core.clone();

        let found = table.find_piece(&core).ok_or_else(|| DecomposeError::PieceNotFound { word: core.clone() })?;
        let mut position = found.position;
        if position + 4 > core.len() {
            // Wrapping piece: rotate it to the front, absorbing the prefix into
            // the outer conjugator.
            outer = &outer * &core.slice(0..position);
            core = core.rotate_left(position);
            position = 0;
        }

        let entry = table.entry(found.entry);
        let prefix = core.slice(0..position);
        let suffix = core.slice(position + 4..core.len());

        let conjugator = Word::product([&outer, &prefix, &entry.rotation.inverse()]);
        factors.push(Factor::new(conjugator, entry.exponent));

        let next = Word::product([&prefix, &Word::from_letter(entry.completion), &suffix]);
        if next.len() + 3 > before.len() || next.ab_length() + 2 > before.ab_length() {
            return Err(DecomposeError::NoProgress { before, after: next });
        }
        trace.push(Step {
            before,
            piece: entry.piece.clone(),
            position: found.position,
            entry: found.entry,
            after: next.clone(),
        });
        current = next;
    }
    Ok((Decomposition { factors }, trace))
}

/// Checks that the factors multiply out to `w` in the free group.
pub fn verify_decomposition(w: &Word, decomposition: &Decomposition) -> bool {
    decomposition.product() == w.free_reduce()
}

/// Decomposes `w` and bundles the result with the `|φ(w)|` lower bound.
///
/// Fails with [`DecomposeError::SelfCheckFailed`] if the decomposition does not
/// multiply back to `w`, exceeds half the `(a,b)`-length, or undercuts `|φ(w)|`.
pub fn certify(w: &Word) -> Result<AreaCertificate, DecomposeError> {
    let (decomposition, trace) = decompose_traced(w)?;
    let word = w.free_reduce();
    let upper = decomposition.len();
    let lower = word.phi().unsigned_abs() as usize;
    let ab_len = word.ab_length();
    let fail = |reason| Err(DecomposeError::SelfCheckFailed { word: word.clone(), reason });
    if !verify_decomposition(&word, &decomposition) {
        return fail("product of factors differs from the word");
    }
    if !word.is_empty() && 2 * upper > ab_len {
        return fail("more factors than half the (a,b)-length");
    }
    if lower > upper {
        return fail("fewer factors than |phi|");
    }
    Ok(AreaCertificate { exact: lower == upper, word, decomposition, upper, lower, ab_len, trace })
}

/// `u_k = (b⁻¹c)^k · a · b^k · a⁻¹`, the family on which the half-length
/// bound is asymptotically sharp.
pub fn sharpness_word(k: usize) -> Word {
    let text = format!("{}a{}A", "Bc".repeat(k), "b".repeat(k));
    crate::word::w(&text)
}
