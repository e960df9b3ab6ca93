//! Rule-based token edits: synonym replacement (SR), random insertion (RI),
//! random swap (RS) and random deletion (RD).

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lexicon::{Stopwords, SynonymLexicon};
use super::Augmenter;
use crate::error::{Error, Result};
use crate::text::TokenizedText;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdaOp {
    SynonymReplace,
    RandomInsert,
    RandomSwap,
    RandomDelete,
}

impl EdaOp {
    pub const ALL: [EdaOp; 4] = [
        EdaOp::SynonymReplace,
        EdaOp::RandomInsert,
        EdaOp::RandomSwap,
        EdaOp::RandomDelete,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdaConfig {
    /// Fraction of tokens touched by SR, RI and RS.
    pub alpha_eda: f64,
    /// Per-token deletion probability for RD.
    pub p_delete: f64,
    pub ops_enabled: Vec<EdaOp>,
    pub seed: u64,
}

impl Default for EdaConfig {
    fn default() -> Self {
        Self {
            alpha_eda: 0.1,
            p_delete: 0.1,
            ops_enabled: EdaOp::ALL.to_vec(),
            seed: 0,
        }
    }
}

impl EdaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_eda > 0.0 && self.alpha_eda <= 1.0) {
            return Err(Error::Config(format!(
                "alpha_eda must lie in (0, 1], got {}",
                self.alpha_eda
            )));
        }
        if !(0.0..=1.0).contains(&self.p_delete) {
            return Err(Error::Config(format!(
                "p_delete must lie in [0, 1], got {}",
                self.p_delete
            )));
        }
        if self.ops_enabled.is_empty() {
            return Err(Error::Config("at least one augmentation op must be enabled".into()));
        }
        Ok(())
    }

    /// `max(1, round(alpha_eda * token_count))`.
    pub fn n_changes(&self, token_count: usize) -> usize {
        ((self.alpha_eda * token_count as f64).round() as usize).max(1)
    }
}

fn eligible(word: &str, lex: &SynonymLexicon, stop: &Stopwords) -> bool {
    !stop.contains(word) && lex.has_synonyms(word)
}

/// Replaces up to `n` distinct eligible positions with a uniformly chosen synonym.
pub fn synonym_replace<R: Rng + ?Sized>(
    text: &TokenizedText,
    n: usize,
    rng: &mut R,
    lex: &SynonymLexicon,
    stop: &Stopwords,
) -> TokenizedText {
    let mut tokens = text.tokens().to_vec();
    let mut positions: Vec<usize> = (0..tokens.len())
        .filter(|&i| eligible(&tokens[i], lex, stop))
        .collect();
    positions.shuffle(rng);
    for &i in positions.iter().take(n) {
        if let Some(s) = lex.synonyms(&tokens[i]).choose(rng) {
            tokens[i] = s.clone();
        }
    }
    text.with_tokens(tokens)
}

/// `n` times: inserts a synonym of a random eligible token at a random position.
pub fn random_insert<R: Rng + ?Sized>(
    text: &TokenizedText,
    n: usize,
    rng: &mut R,
    lex: &SynonymLexicon,
    stop: &Stopwords,
) -> TokenizedText {
    let mut tokens = text.tokens().to_vec();
    for _ in 0..n {
        let sources: Vec<usize> = (0..tokens.len())
            .filter(|&i| eligible(&tokens[i], lex, stop))
            .collect();
        let Some(&src) = sources.choose(rng) else {
            break;
        };
        let Some(syn) = lex.synonyms(&tokens[src]).choose(rng).cloned() else {
            break;
        };
        let at = rng.random_range(0..=tokens.len());
        tokens.insert(at, syn);
    }
    text.with_tokens(tokens)
}

/// `n` times: exchanges the tokens at two distinct uniformly chosen positions.
pub fn random_swap<R: Rng + ?Sized>(text: &TokenizedText, n: usize, rng: &mut R) -> TokenizedText {
    let mut tokens = text.tokens().to_vec();
    if tokens.len() >= 2 {
        for _ in 0..n {
            let a = rng.random_range(0..tokens.len());
            let mut b = rng.random_range(0..tokens.len() - 1);
            if b >= a {
                b += 1;
            }
            tokens.swap(a, b);
        }
    }
    text.with_tokens(tokens)
}

/// Drops each token with probability `p_delete`, keeping one random token if
/// every token would be dropped.
pub fn random_delete<R: Rng + ?Sized>(
    text: &TokenizedText,
    p_delete: f64,
    rng: &mut R,
) -> TokenizedText {
    let tokens = text.tokens();
    let kept: Vec<String> = tokens
        .iter()
        .filter(|_| rng.random::<f64>() >= p_delete)
        .cloned()
        .collect();
    if kept.is_empty() {
        let keep = rng.random_range(0..tokens.len());
        return text.with_tokens(vec![tokens[keep].clone()]);
    }
    text.with_tokens(kept)
}

/// Applies one uniformly chosen enabled op per candidate, `count` times.
/// Duplicates (of each other or of the input) are kept.
pub fn generate_candidates(
    text: &TokenizedText,
    count: usize,
    cfg: &EdaConfig,
    lex: &SynonymLexicon,
    stop: &Stopwords,
) -> Result<Vec<TokenizedText>> {
    cfg.validate()?;
    if text.is_empty() {
        return Err(Error::Domain("cannot augment an empty text".into()));
    }
    if count == 0 {
        return Err(Error::Domain("candidate count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_changes(text.len());
    let candidates = (0..count)
        .map(|_| {
            let op = *cfg.ops_enabled.choose(&mut rng).expect("validated non-empty");
            match op {
                EdaOp::SynonymReplace => synonym_replace(text, n, &mut rng, lex, stop),
                EdaOp::RandomInsert => random_insert(text, n, &mut rng, lex, stop),
                EdaOp::RandomSwap => random_swap(text, n, &mut rng),
                EdaOp::RandomDelete => random_delete(text, cfg.p_delete, &mut rng),
            }
        })
        .collect();
    Ok(candidates)
}

/// EDA-style augmenter over a synonym lexicon.
#[derive(Debug, Clone)]
pub struct EdaAugmenter {
    pub config: EdaConfig,
    pub lexicon: SynonymLexicon,
    pub stopwords: Stopwords,
}

impl EdaAugmenter {
    pub fn new(config: EdaConfig, lexicon: SynonymLexicon, stopwords: Stopwords) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            lexicon,
            stopwords,
        })
    }
}

impl Augmenter for EdaAugmenter {
    fn augment(&self, text: &TokenizedText, count: usize, seed: u64) -> Result<Vec<TokenizedText>> {
        let cfg = EdaConfig {
            seed,
            ..self.config.clone()
        };
        generate_candidates(text, count, &cfg, &self.lexicon, &self.stopwords)
    }
}
