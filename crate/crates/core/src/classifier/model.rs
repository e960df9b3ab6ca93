use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::features::{featurize, FeatureVector, FeaturizerConfig};
use crate::error::{Error, Result};
use crate::infotheory::{rem_score, OneHotLabel, ProbVector, EPS};
use crate::text::{Sample, TokenizedText};

/// Anything that maps texts to class distributions.
pub trait Scorer: Sync {
    fn num_classes(&self) -> usize;

    /// One distribution per input, in input order.
    fn predict_batch(&self, texts: &[TokenizedText]) -> Result<Vec<ProbVector>>;
}

/// Softmax linear classifier over hashed n-gram features.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub(crate) featurizer: FeaturizerConfig,
    pub(crate) labels: Vec<String>,
    /// `dim × C`, row-major.
    pub(crate) weights: Vec<f64>,
    pub(crate) bias: Vec<f64>,
}

/// Dense gradient with the same layout as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Gradient {
    pub fn zeros_like(model: &Model) -> Self {
        Self {
            weights: vec![0.0; model.weights.len()],
            bias: vec![0.0; model.bias.len()],
        }
    }

    fn clear(&mut self) {
        self.weights.iter_mut().for_each(|g| *g = 0.0);
        self.bias.iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|g| g.is_finite())
    }
}

/// A featurized training example with its selected augmentations.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainItem {
    pub features: FeatureVector,
    pub label: usize,
    pub augmented: Vec<FeatureVector>,
}

/// Candidates generated from one source sample; they share its label.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedGroup {
    pub label: usize,
    pub texts: Vec<TokenizedText>,
}

impl Model {
    /// All-zero parameters; predicts the uniform distribution.
    pub fn new(featurizer: FeaturizerConfig, labels: Vec<String>) -> Result<Self> {
        featurizer.validate()?;
        if labels.len() < 2 {
            return Err(Error::Config(format!(
                "a classifier needs at least 2 labels, got {}",
                labels.len()
            )));
        }
        let c = labels.len();
        Ok(Self {
            weights: vec![0.0; featurizer.dim * c],
            bias: vec![0.0; c],
            featurizer,
            labels,
        })
    }

    /// Parameters drawn uniformly from `[-scale, scale]`.
    pub fn random(featurizer: FeaturizerConfig, labels: Vec<String>, scale: f64, seed: u64) -> Result<Self> {
        let mut model = Self::new(featurizer, labels)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in model.weights.iter_mut().chain(model.bias.iter_mut()) {
            *w = rng.random_range(-scale..=scale);
        }
        Ok(model)
    }

    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn featurizer(&self) -> &FeaturizerConfig {
        &self.featurizer
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|w| w.is_finite())
    }

    pub fn featurize(&self, text: &TokenizedText) -> Result<FeatureVector> {
        featurize(text, &self.featurizer)
    }

    pub fn logits(&self, features: &FeatureVector) -> Result<Vec<f64>> {
        let c = self.num_classes();
        let mut out = self.bias.clone();
        for &(idx, val) in features.entries() {
            let row = self.weights.get(idx * c..(idx + 1) * c).ok_or_else(|| {
                Error::Domain(format!("feature index {idx} outside model dimension {}", self.featurizer.dim))
            })?;
            for (o, w) in out.iter_mut().zip(row) {
                *o += val * w;
            }
        }
        Ok(out)
    }

    pub fn predict_features(&self, features: &FeatureVector) -> Result<ProbVector> {
        ProbVector::softmax(&self.logits(features)?)
    }

    pub fn predict_proba(&self, text: &TokenizedText) -> Result<ProbVector> {
        self.predict_features(&self.featurize(text)?)
    }

    /// Most probable class; ties go to the lowest index.
    pub fn predict(&self, text: &TokenizedText) -> Result<usize> {
        Ok(self.predict_proba(text)?.argmax())
    }

    fn label(&self, class: usize) -> Result<OneHotLabel> {
        OneHotLabel::new(class, self.num_classes())
    }

    fn cross_entropy(&self, features: &FeatureVector, class: usize) -> Result<f64> {
        rem_score(&self.predict_features(features)?, self.label(class)?, EPS)
    }

    /// Mean cross-entropy of the originals against their labels.
    pub fn loss_original(&self, samples: &[Sample]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::Domain("loss over an empty sample set".into()));
        }
        let mut acc = 0.0;
        for s in samples {
            acc += self.cross_entropy(&self.featurize(&s.text)?, s.label)?;
        }
        Ok(acc / samples.len() as f64)
    }

    /// Mean over groups of the mean cross-entropy within each group.
    pub fn loss_generated(&self, groups: &[AugmentedGroup]) -> Result<f64> {
        let m = check_groups(groups.iter().map(|g| g.texts.len()))?;
        let mut acc = 0.0;
        for g in groups {
            for t in &g.texts {
                acc += self.cross_entropy(&self.featurize(t)?, g.label)?;
            }
        }
        Ok(acc / (groups.len() * m) as f64)
    }

    pub fn loss_total(&self, samples: &[Sample], groups: &[AugmentedGroup]) -> Result<f64> {
        Ok(self.loss_original(samples)? + self.loss_generated(groups)?)
    }

    /// Loss over a featurized batch together with its gradient, written into `grad`.
    ///
    /// Items without augmentations contribute only the original term; if any
    /// item carries augmentations, all must carry the same number and the
    /// generated term is added.
    pub fn loss_and_gradient(&self, items: &[TrainItem], grad: &mut Gradient) -> Result<f64> {
        if items.is_empty() {
            return Err(Error::Domain("gradient over an empty batch".into()));
        }
        grad.clear();
        let n = items.len() as f64;
        let mut loss = 0.0;
        for item in items {
            loss += self.accumulate(&item.features, item.label, 1.0 / n, grad)?;
        }
        if items.iter().any(|i| !i.augmented.is_empty()) {
            let m = check_groups(items.iter().map(|i| i.augmented.len()))? as f64;
            for item in items {
                for f in &item.augmented {
                    loss += self.accumulate(f, item.label, 1.0 / (n * m), grad)?;
                }
            }
        }
        Ok(loss)
    }

    /// Adds `weight · ∂CE/∂θ` to `grad` and returns `weight · CE`.
    fn accumulate(&self, features: &FeatureVector, class: usize, weight: f64, grad: &mut Gradient) -> Result<f64> {
        let c = self.num_classes();
        let probs = self.predict_features(features)?;
        let y = self.label(class)?;
        let loss = rem_score(&probs, y, EPS)?;
        // Inside the clamped region the loss is flat.
        if probs.as_slice()[class] < EPS {
            return Ok(weight * loss);
        }
        let mut delta = probs.as_slice().to_vec();
        delta[class] -= 1.0;
        for (b, d) in grad.bias.iter_mut().zip(&delta) {
            *b += weight * d;
        }
        for &(idx, val) in features.entries() {
            let row = &mut grad.weights[idx * c..(idx + 1) * c];
            for (g, d) in row.iter_mut().zip(&delta) {
                *g += weight * val * d;
            }
        }
        Ok(weight * loss)
    }
}

fn check_groups(sizes: impl Iterator<Item = usize>) -> Result<usize> {
    let mut m = None;
    for size in sizes {
        match m {
            None => m = Some(size),
            Some(prev) if prev != size => {
                return Err(Error::Domain(format!("ragged augmentation groups: {prev} vs {size}")));
            }
            _ => {}
        }
    }
    match m {
        Some(m) if m > 0 => Ok(m),
        _ => Err(Error::Domain("augmentation groups must be non-empty".into())),
    }
}

impl Scorer for Model {
    fn num_classes(&self) -> usize {
        self.labels.len()
    }

    fn predict_batch(&self, texts: &[TokenizedText]) -> Result<Vec<ProbVector>> {
        texts.iter().map(|t| self.predict_proba(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> TokenizedText {
        TokenizedText::parse(s).unwrap()
    }

    fn labels(c: usize) -> Vec<String> {
        (0..c).map(|i| format!("c{i}")).collect()
    }

    fn small() -> FeaturizerConfig {
        FeaturizerConfig {
            dim: 32,
            ..FeaturizerConfig::default()
        }
    }

    #[test]
    fn zero_model_is_uniform() {
        let model = Model::new(small(), labels(4)).unwrap();
        let p = model.predict_proba(&t("anything at all")).unwrap();
        for x in p.as_slice() {
            assert!((x - 0.25).abs() < 1e-15);
        }
        let s = vec![Sample::new(t("a b"), 0), Sample::new(t("c"), 3)];
        assert!((model.loss_original(&s).unwrap() - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn large_bias_saturates() {
        let mut model = Model::new(small(), labels(3)).unwrap();
        model.bias[0] = 50.0;
        let p = model.predict_proba(&t("x")).unwrap();
        assert!((p.as_slice()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn random_models_give_distributions() {
        for seed in 0..20 {
            let model = Model::random(small(), labels(5), 3.0, seed).unwrap();
            let p = model.predict_proba(&t("some words here")).unwrap();
            let sum: f64 = p.as_slice().iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(p.as_slice().iter().all(|x| *x >= 0.0));
        }
    }

    /// Unigram-only model with one-hot-ish hand-set weights; features of a
    /// single-token text are exactly `{bucket(tok): 1.0}`.
    #[test]
    fn loss_original_hand_computed() {
        let cfg = FeaturizerConfig {
            dim: 1024,
            ngram_orders: vec![1],
            hash_seed: 7,
        };
        let mut model = Model::new(cfg, labels(2)).unwrap();
        let fa = model.featurize(&t("alpha")).unwrap();
        let fb = model.featurize(&t("beta")).unwrap();
        assert_eq!(fa.entries().len(), 1);
        assert_ne!(fa.entries()[0].0, fb.entries()[0].0);
        let (ia, ib) = (fa.entries()[0].0, fb.entries()[0].0);
        model.weights[ia * 2] = 1.0; // alpha -> logits (1, 0)
        model.weights[ib * 2 + 1] = 2.0; // beta -> logits (0, 2)
        let samples = vec![Sample::new(t("alpha"), 0), Sample::new(t("beta"), 0)];
        // CE1 = ln(1 + e^-1), CE2 = ln(1 + e^2)
        let expected = ((1.0 + (-1f64).exp()).ln() + (1.0 + 2f64.exp()).ln()) / 2.0;
        assert!((model.loss_original(&samples).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn loss_generated_hand_computed() {
        let cfg = FeaturizerConfig {
            dim: 1024,
            ngram_orders: vec![1],
            hash_seed: 7,
        };
        let mut model = Model::new(cfg, labels(2)).unwrap();
        let ia = model.featurize(&t("alpha")).unwrap().entries()[0].0;
        model.weights[ia * 2] = 1.0;
        // group 0 (label 0): alpha, gamma; group 1 (label 1): alpha, alpha
        let groups = vec![
            AugmentedGroup { label: 0, texts: vec![t("alpha"), t("gamma")] },
            AugmentedGroup { label: 1, texts: vec![t("alpha"), t("alpha")] },
        ];
        let ce_a0 = (1.0 + (-1f64).exp()).ln();
        let ce_u = 2f64.ln();
        let ce_a1 = (1.0 + 1f64.exp()).ln();
        let expected = ((ce_a0 + ce_u) / 2.0 + (ce_a1 + ce_a1) / 2.0) / 2.0;
        assert!((model.loss_generated(&groups).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn loss_reductions() {
        let model = Model::random(small(), labels(3), 1.0, 4).unwrap();
        let samples = vec![
            Sample::new(t("red fish"), 0),
            Sample::new(t("blue fish"), 1),
            Sample::new(t("one two"), 2),
        ];
        let groups: Vec<AugmentedGroup> = samples
            .iter()
            .map(|s| AugmentedGroup { label: s.label, texts: vec![s.text.clone()] })
            .collect();
        let orig = model.loss_original(&samples).unwrap();
        assert!((model.loss_generated(&groups).unwrap() - orig).abs() < 1e-12);
        let total = model.loss_total(&samples, &groups).unwrap();
        assert!((total - 2.0 * orig).abs() < 1e-12);
        let sum = model.loss_original(&samples).unwrap() + model.loss_generated(&groups).unwrap();
        assert!((total - sum).abs() < 1e-12);
    }

    #[test]
    fn ragged_groups_rejected() {
        let model = Model::new(small(), labels(2)).unwrap();
        let groups = vec![
            AugmentedGroup { label: 0, texts: vec![t("a")] },
            AugmentedGroup { label: 1, texts: vec![t("a"), t("b")] },
        ];
        assert!(matches!(model.loss_generated(&groups), Err(Error::Domain(_))));
    }

    #[test]
    fn needs_two_labels() {
        assert!(Model::new(small(), labels(1)).is_err());
    }
}
