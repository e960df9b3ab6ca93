//! Hashed bag of n-grams.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use twox_hash::XxHash64;

use crate::error::{Error, Result};
use crate::text::TokenizedText;

const NGRAM_SEPARATOR: u8 = 0x1f;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeaturizerConfig {
    /// Hash space size; must be a power of two.
    pub dim: usize,
    pub ngram_orders: Vec<usize>,
    pub hash_seed: u64,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        Self {
            dim: 1 << 18,
            ngram_orders: vec![1, 2],
            hash_seed: 0x9E37_79B9,
        }
    }
}

impl FeaturizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.dim.is_power_of_two() {
            return Err(Error::Config(format!("feature dim {} is not a power of two", self.dim)));
        }
        if self.ngram_orders.is_empty() || self.ngram_orders.contains(&0) {
            return Err(Error::Config("n-gram orders must be a non-empty set of positive sizes".into()));
        }
        Ok(())
    }

    fn bucket(&self, gram: &[String]) -> usize {
        let mut bytes = Vec::with_capacity(gram.iter().map(|t| t.len() + 1).sum());
        for (i, tok) in gram.iter().enumerate() {
            if i > 0 {
                bytes.push(NGRAM_SEPARATOR);
            }
            bytes.extend_from_slice(tok.as_bytes());
        }
        (XxHash64::oneshot(self.hash_seed, &bytes) as usize) & (self.dim - 1)
    }
}

/// Sparse feature vector, entries sorted by index.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    /// Copy scaled to unit Euclidean norm.
    pub fn l2_normalized(&self) -> FeatureVector {
        let norm = self.norm();
        let scale = if norm > 0.0 { 1.0 / norm } else { 0.0 };
        FeatureVector {
            entries: self.entries.iter().map(|&(i, v)| (i, v * scale)).collect(),
        }
    }

    pub fn euclidean_distance(&self, other: &FeatureVector) -> f64 {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut acc = 0.0;
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&(i, x)), Some(&&(j, y))) => {
                    if i == j {
                        acc += (x - y) * (x - y);
                        a.next();
                        b.next();
                    } else if i < j {
                        acc += x * x;
                        a.next();
                    } else {
                        acc += y * y;
                        b.next();
                    }
                }
                (Some(&&(_, x)), None) => {
                    acc += x * x;
                    a.next();
                }
                (None, Some(&&(_, y))) => {
                    acc += y * y;
                    b.next();
                }
                (None, None) => break,
            }
        }
        acc.sqrt()
    }
}

/// n-gram counts hashed into `dim` buckets, each scaled by `1/sqrt(nnz)`.
pub fn featurize(text: &TokenizedText, cfg: &FeaturizerConfig) -> Result<FeatureVector> {
    if text.is_empty() {
        return Err(Error::Domain("cannot featurize an empty text".into()));
    }
    let tokens = text.tokens();
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for &order in &cfg.ngram_orders {
        if order > tokens.len() {
            continue;
        }
        for gram in tokens.windows(order) {
            *counts.entry(cfg.bucket(gram)).or_insert(0.0) += 1.0;
        }
    }
    let scale = 1.0 / (counts.len() as f64).sqrt();
    Ok(FeatureVector {
        entries: counts.into_iter().map(|(i, c)| (i, c * scale)).collect(),
    })
}
