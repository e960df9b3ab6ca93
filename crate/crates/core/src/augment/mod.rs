//! Candidate generation.
//!
//! Anything implementing [`Augmenter`] can feed the selection step; the
//! built-in [`EdaAugmenter`] applies word-level edits driven by a synonym
//! lexicon.

mod eda;
mod lexicon;

pub use eda::{
    generate_candidates, random_delete, random_insert, random_swap, synonym_replace, EdaAugmenter,
    EdaConfig, EdaOp,
};
pub use lexicon::{Stopwords, SynonymLexicon};

use crate::error::Result;
use crate::text::TokenizedText;

/// Produces `count` non-empty candidate texts for one input.
///
/// Implementations must be deterministic in `(text, count, seed)`.
pub trait Augmenter: Sync {
    fn augment(&self, text: &TokenizedText, count: usize, seed: u64) -> Result<Vec<TokenizedText>>;
}

/// Returns the input verbatim `count` times.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityAugmenter;

impl Augmenter for IdentityAugmenter {
    fn augment(&self, text: &TokenizedText, count: usize, _seed: u64) -> Result<Vec<TokenizedText>> {
        Ok(vec![text.clone(); count])
    }
}
