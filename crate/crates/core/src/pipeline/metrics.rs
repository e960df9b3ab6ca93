use serde::{Deserialize, Serialize};

use crate::classifier::{featurize, FeaturizerConfig};
use crate::error::{Error, Result};
use crate::seas::Candidate;
use crate::text::{Sample, TokenizedText};

/// Ground-truth labeller for generated texts. `None` means the text carries
/// no recoverable label.
pub trait LabelingOracle: Sync {
    fn label(&self, text: &TokenizedText) -> Option<usize>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Report {
    pub macro_f1: f64,
    pub per_class_f1: Vec<f64>,
    /// F1 of class 1, reported for binary tasks only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positive_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityDiversity {
    /// Fraction of candidates the oracle labels differently from their source.
    pub error_rate: Option<f64>,
    /// Mean distance between normalized source and candidate features,
    /// oracle-rejected pairs excluded.
    pub mean_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub macro_f1: f64,
    pub per_class_f1: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positive_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples_per_second: Option<f64>,
}

impl MetricsReport {
    pub fn new(f1: F1Report, quality: Option<QualityDiversity>) -> Self {
        Self {
            macro_f1: f1.macro_f1,
            per_class_f1: f1.per_class_f1,
            positive_f1: f1.positive_f1,
            error_rate: quality.as_ref().and_then(|q| q.error_rate),
            mean_distance: quality.map(|q| q.mean_distance),
            samples_per_second: None,
        }
    }
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

pub fn evaluate_macro_f1(predictions: &[usize], gold: &[usize], num_classes: usize) -> Result<F1Report> {
    if predictions.len() != gold.len() {
        return Err(Error::Domain(format!(
            "{} predictions for {} gold labels",
            predictions.len(),
            gold.len()
        )));
    }
    if num_classes == 0 {
        return Err(Error::Domain("no classes".into()));
    }
    if let Some(&bad) = predictions.iter().chain(gold).find(|&&l| l >= num_classes) {
        return Err(Error::Domain(format!("label {bad} outside {num_classes} classes")));
    }
    let mut confusion = vec![vec![0usize; num_classes]; num_classes];
    for (&p, &g) in predictions.iter().zip(gold) {
        confusion[g][p] += 1;
    }
    let per_class_f1: Vec<f64> = (0..num_classes)
        .map(|c| {
            let tp = confusion[c][c];
            let fp = (0..num_classes).map(|g| confusion[g][c]).sum::<usize>() - tp;
            let fn_ = confusion[c].iter().sum::<usize>() - tp;
            f1(tp, fp, fn_)
        })
        .collect();
    Ok(F1Report {
        macro_f1: per_class_f1.iter().sum::<f64>() / num_classes as f64,
        positive_f1: (num_classes == 2).then(|| per_class_f1[1]),
        per_class_f1,
    })
}

pub fn quality_diversity_metrics(
    originals: &[Sample],
    selected: &[Candidate],
    featurizer: &FeaturizerConfig,
    oracle: Option<&dyn LabelingOracle>,
) -> Result<QualityDiversity> {
    if selected.is_empty() {
        return Err(Error::Domain("no candidates to measure".into()));
    }
    let mut errors = 0usize;
    let mut distance = 0.0;
    let mut counted = 0usize;
    for (i, c) in selected.iter().enumerate() {
        let source = originals.get(c.source_index).ok_or_else(|| {
            Error::Domain(format!("candidate {i} points at sample {} of {}", c.source_index, originals.len()))
        })?;
        if source.label != c.label {
            return Err(Error::Domain(format!("candidate {i} label differs from its source")));
        }
        if let Some(oracle) = oracle {
            if oracle.label(&c.text) != Some(source.label) {
                errors += 1;
                continue;
            }
        }
        let a = featurize(&source.text, featurizer)?.l2_normalized();
        let b = featurize(&c.text, featurizer)?.l2_normalized();
        distance += a.euclidean_distance(&b);
        counted += 1;
    }
    Ok(QualityDiversity {
        error_rate: oracle.map(|_| errors as f64 / selected.len() as f64),
        mean_distance: if counted == 0 { 0.0 } else { distance / counted as f64 },
    })
}
