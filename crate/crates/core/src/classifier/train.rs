//! AdamW training loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{Gradient, Model, TrainItem};
use crate::error::{Error, Result};
use crate::text::Sample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Decoupled weight decay, applied to weights but not biases.
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            weight_decay: 1e-4,
            batch_size: 32,
            epochs: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(format!("learning rate must be non-negative, got {}", self.learning_rate)));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::Config(format!("weight decay must be non-negative, got {}", self.weight_decay)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Adam moments with decoupled weight decay.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m_w: Vec<f64>,
    v_w: Vec<f64>,
    m_b: Vec<f64>,
    v_b: Vec<f64>,
}

impl AdamW {
    pub fn new(model: &Model) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m_w: vec![0.0; model.weights.len()],
            v_w: vec![0.0; model.weights.len()],
            m_b: vec![0.0; model.bias.len()],
            v_b: vec![0.0; model.bias.len()],
        }
    }

    pub fn step(&mut self, model: &mut Model, grad: &Gradient, lr: f64, weight_decay: f64) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64, decay: f64| {
            *p *= 1.0 - lr * decay;
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
        };
        for i in 0..model.weights.len() {
            update(&mut model.weights[i], grad.weights[i], &mut self.m_w[i], &mut self.v_w[i], weight_decay);
        }
        for i in 0..model.bias.len() {
            update(&mut model.bias[i], grad.bias[i], &mut self.m_b[i], &mut self.v_b[i], 0.0);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub loss: f64,
    pub batch_size: usize,
}

/// A model under training together with its optimizer state.
#[derive(Debug, Clone)]
pub struct Trainer {
    model: Model,
    optimizer: AdamW,
    grad: Gradient,
    config: TrainConfig,
}

impl Trainer {
    pub fn new(model: Model, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            optimizer: AdamW::new(&model),
            grad: Gradient::zeros_like(&model),
            model,
            config,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn into_model(self) -> Model {
        self.model
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// One optimizer step on the batch loss (original term, plus the
    /// generated term when the batch carries augmentations).
    pub fn train_step(&mut self, batch: &[TrainItem]) -> Result<LossReport> {
        let loss = self.model.loss_and_gradient(batch, &mut self.grad)?;
        if !loss.is_finite() || !self.grad.is_finite() {
            return Err(Error::Training(format!(
                "non-finite loss or gradient at step {} (loss = {loss})",
                self.optimizer.step + 1
            )));
        }
        self.optimizer
            .step(&mut self.model, &self.grad, self.config.learning_rate, self.config.weight_decay);
        if !self.model.is_finite() {
            return Err(Error::Training(format!(
                "parameters became non-finite at step {}",
                self.optimizer.step
            )));
        }
        Ok(LossReport {
            loss,
            batch_size: batch.len(),
        })
    }

    /// One pass over `items` in an order shuffled by `rng`; returns the mean batch loss.
    pub fn train_epoch(&mut self, items: &[TrainItem], rng: &mut ChaCha8Rng) -> Result<f64> {
        if items.is_empty() {
            return Err(Error::Domain("cannot train on an empty set".into()));
        }
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.shuffle(rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        let mut batch = Vec::with_capacity(self.config.batch_size);
        for chunk in order.chunks(self.config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| items[i].clone()));
            total += self.train_step(&batch)?.loss;
            batches += 1;
        }
        Ok(total / batches as f64)
    }
}

pub fn featurize_samples(model: &Model, samples: &[Sample]) -> Result<Vec<TrainItem>> {
    samples
        .iter()
        .map(|s| {
            Ok(TrainItem {
                features: model.featurize(&s.text)?,
                label: s.label,
                augmented: Vec::new(),
            })
        })
        .collect()
}

/// `cfg.epochs` shuffled passes over the originals.
pub fn pretrain(model: Model, samples: &[Sample], cfg: &TrainConfig) -> Result<Model> {
    if samples.is_empty() {
        return Err(Error::Domain("cannot pre-train on an empty dataset".into()));
    }
    let items = featurize_samples(&model, samples)?;
    let mut trainer = Trainer::new(model, cfg.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.epochs {
        trainer.train_epoch(&items, &mut rng)?;
    }
    Ok(trainer.into_model())
}
