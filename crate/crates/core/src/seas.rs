//! Sample evaluation and selection.
//!
//! For one source sample: generate `K·m` candidates, score each with the
//! classifier (diversity via [`rem_score`], quality via [`cem_score`]),
//! min-max normalize each score family over the pool, combine them, and keep
//! the `m` best. Normalization never crosses pools.

use serde::{Deserialize, Serialize};

use crate::augment::Augmenter;
use crate::classifier::Scorer;
use crate::error::{Error, Result};
use crate::infotheory::{combine, min_max_norm, score_pair, OneHotLabel, ScorePair, Scheme, EPS};
use crate::text::{Sample, TokenizedText};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasConfig {
    /// Outputs per input.
    pub m: usize,
    /// Amplification factor: the pool holds `k * m` candidates.
    pub k: usize,
    pub scheme: Scheme,
    pub eps: f64,
    /// Min-max normalize each score family over the pool before combining.
    pub normalize: bool,
    /// Drop repeated candidate texts before scoring. The output may then hold
    /// fewer than `m` candidates.
    pub dedup: bool,
}

impl Default for SeasConfig {
    fn default() -> Self {
        Self {
            m: 3,
            k: 3,
            scheme: Scheme::Add,
            eps: EPS,
            normalize: true,
            dedup: false,
        }
    }
}

impl SeasConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 {
            return Err(Error::Config(format!("m and k must be at least 1 (m={}, k={})", self.m, self.k)));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::Config(format!("clamp constant must be positive, got {}", self.eps)));
        }
        self.scheme.validate()
    }

    pub fn pool_size(&self) -> usize {
        self.k * self.m
    }
}

/// A scored augmentation of one source sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: TokenizedText,
    pub s_div_raw: f64,
    pub s_qua_raw: f64,
    pub s_div: f64,
    pub s_qua: f64,
    pub s_tot: f64,
    pub source_index: usize,
    /// Position in the candidate pool it was drawn from.
    pub pool_index: usize,
    pub label: usize,
}

/// Normalized diversity, quality and total for every member of a pool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolScore {
    pub s_div: f64,
    pub s_qua: f64,
    pub s_tot: f64,
}

/// Normalizes and combines raw score pairs of one pool.
pub fn score_pool(raw: &[ScorePair], scheme: Scheme, normalize: bool) -> Result<Vec<PoolScore>> {
    let div: Vec<f64> = raw.iter().map(|p| p.s_div_raw).collect();
    let qua: Vec<f64> = raw.iter().map(|p| p.s_qua_raw).collect();
    let (div, qua) = if normalize {
        (min_max_norm(&div)?, min_max_norm(&qua)?)
    } else {
        if raw.is_empty() {
            return Err(Error::Domain("cannot score an empty pool".into()));
        }
        (div, qua)
    };
    div.into_iter()
        .zip(qua)
        .map(|(s_div, s_qua)| {
            Ok(PoolScore {
                s_div,
                s_qua,
                s_tot: combine(s_div, s_qua, scheme)?,
            })
        })
        .collect()
}

/// Scores `candidates` generated from `source` against the classifier.
pub fn score_candidates(
    scorer: &dyn Scorer,
    source: &Sample,
    source_index: usize,
    candidates: Vec<TokenizedText>,
    cfg: &SeasConfig,
) -> Result<Vec<Candidate>> {
    if candidates.is_empty() {
        return Err(Error::Domain("candidate pool is empty".into()));
    }
    let y = OneHotLabel::new(source.label, scorer.num_classes())?;
    let mut texts = Vec::with_capacity(candidates.len() + 1);
    texts.push(source.text.clone());
    texts.extend(candidates.iter().cloned());
    let probs = scorer.predict_batch(&texts)?;
    if probs.len() != texts.len() {
        return Err(Error::Protocol(format!(
            "scorer returned {} distributions for {} texts",
            probs.len(),
            texts.len()
        )));
    }
    let zt = &probs[0];
    let raw = probs[1..]
        .iter()
        .map(|z| score_pair(z, zt, y, cfg.eps))
        .collect::<Result<Vec<_>>>()?;
    let scores = score_pool(&raw, cfg.scheme, cfg.normalize)?;
    Ok(candidates
        .into_iter()
        .zip(raw.iter().zip(scores))
        .enumerate()
        .map(|(pool_index, (text, (r, s)))| Candidate {
            text,
            s_div_raw: r.s_div_raw,
            s_qua_raw: r.s_qua_raw,
            s_div: s.s_div,
            s_qua: s.s_qua,
            s_tot: s.s_tot,
            source_index,
            pool_index,
            label: source.label,
        })
        .collect())
}

/// Indices of the `m` largest scores, ordered by descending score; equal
/// scores rank by ascending index.
pub fn top_m_indices(scores: &[f64], m: usize) -> Result<Vec<usize>> {
    if scores.len() < m {
        return Err(Error::Domain(format!("pool of {} cannot supply {m} selections", scores.len())));
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::Domain(format!("score {i} is NaN")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(m);
    Ok(order)
}

pub fn select_top_m(candidates: &[Candidate], m: usize) -> Result<Vec<Candidate>> {
    let scores: Vec<f64> = candidates.iter().map(|c| c.s_tot).collect();
    Ok(top_m_indices(&scores, m)?
        .into_iter()
        .map(|i| candidates[i].clone())
        .collect())
}

fn dedup_texts(texts: Vec<TokenizedText>) -> Vec<TokenizedText> {
    let mut seen = std::collections::HashSet::new();
    texts.into_iter().filter(|t| seen.insert(t.canonical())).collect()
}

/// Generates `k·m` candidates for `source`, scores them and keeps the best `m`.
pub fn epida_augment(
    scorer: &dyn Scorer,
    source: &Sample,
    source_index: usize,
    augmenter: &dyn Augmenter,
    cfg: &SeasConfig,
    seed: u64,
) -> Result<Vec<Candidate>> {
    cfg.validate()?;
    let pool = augmenter
        .augment(&source.text, cfg.pool_size(), seed)
        .map_err(|e| e.context(format!("augmenting sample {source_index}")))?;
    if pool.len() != cfg.pool_size() || pool.iter().any(TokenizedText::is_empty) {
        return Err(Error::Domain(format!(
            "augmenter returned {} candidates for sample {source_index}, expected {} non-empty",
            pool.len(),
            cfg.pool_size()
        )));
    }
    let pool = if cfg.dedup { dedup_texts(pool) } else { pool };
    let scored = score_candidates(scorer, source, source_index, pool, cfg)
        .map_err(|e| e.context(format!("scoring sample {source_index}")))?;
    let m = cfg.m.min(scored.len());
    select_top_m(&scored, m)
}
