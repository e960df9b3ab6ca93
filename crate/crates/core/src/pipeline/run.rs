use rand::{seq::index, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::metrics::{evaluate_macro_f1, quality_diversity_metrics, LabelingOracle, MetricsReport};
use crate::augment::Augmenter;
use crate::classifier::{FeaturizerConfig, Model, Scorer, TrainConfig, TrainItem, Trainer};
use crate::error::{Error, Result};
use crate::seas::{epida_augment, score_candidates, Candidate, SeasConfig};
use crate::text::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Augmentation {
    /// Train on originals only.
    Off,
    /// Keep the best-scoring candidates.
    Seas,
    /// Keep uniformly random candidates from the same pools.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Builtin,
    Remote(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seas: SeasConfig,
    /// Optimizer settings; `epochs` and `seed` are superseded by the fields below.
    pub train: TrainConfig,
    pub featurizer: FeaturizerConfig,
    pub pretrain_epochs: usize,
    pub oa_epochs: usize,
    /// Re-augment every epoch; otherwise one round is reused for all epochs.
    pub online: bool,
    pub augmentation: Augmentation,
    pub seeds: Vec<u64>,
    pub data_fraction: f64,
    pub scorer: ScorerKind,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seas: SeasConfig::default(),
            train: TrainConfig::default(),
            featurizer: FeaturizerConfig::default(),
            pretrain_epochs: 10,
            oa_epochs: 10,
            online: true,
            augmentation: Augmentation::Seas,
            seeds: vec![0, 1, 2, 3, 4],
            data_fraction: 1.0,
            scorer: ScorerKind::Builtin,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.seas.validate()?;
        self.train.validate()?;
        self.featurizer.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        if !(self.data_fraction > 0.0 && self.data_fraction <= 1.0) {
            return Err(Error::Config(format!("data fraction must lie in (0, 1], got {}", self.data_fraction)));
        }
        if let ScorerKind::Remote(url) = &self.scorer {
            return Err(Error::Config(format!(
                "training needs the builtin scorer; remote scorer {url} is only usable for augmentation"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub train_size: usize,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seeds: Vec<SeedReport>,
    pub mean_macro_f1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_error_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_distance: Option<f64>,
}

/// Seed for the candidates of sample `index` in augmentation round `round`.
pub fn sample_seed(seed: u64, round: usize, index: usize) -> u64 {
    let mut z = seed
        .wrapping_add((round as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((index as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic subset of `ceil(fraction · n)` samples, in original order.
pub fn subsample(samples: &[Sample], fraction: f64, seed: u64) -> Vec<Sample> {
    if fraction >= 1.0 {
        return samples.to_vec();
    }
    let keep = ((fraction * samples.len() as f64).ceil() as usize).clamp(1, samples.len().max(1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, samples.len(), keep).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| samples[i].clone()).collect()
}

fn random_selection(
    scorer: &dyn Scorer,
    sample: &Sample,
    index: usize,
    augmenter: &dyn Augmenter,
    cfg: &SeasConfig,
    seed: u64,
) -> Result<Vec<Candidate>> {
    let pool = augmenter.augment(&sample.text, cfg.pool_size(), seed)?;
    let scored = score_candidates(scorer, sample, index, pool, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_5E1E_C7ED);
    Ok(index::sample(&mut rng, scored.len(), cfg.m.min(scored.len()))
        .into_iter()
        .map(|i| scored[i].clone())
        .collect())
}

/// Augments every sample in parallel against one scorer; candidates come back
/// grouped by sample, in input order.
pub fn augment_dataset(
    scorer: &dyn Scorer,
    samples: &[Sample],
    augmenter: &dyn Augmenter,
    cfg: &SeasConfig,
    mode: Augmentation,
    seed: u64,
    round: usize,
) -> Result<Vec<Vec<Candidate>>> {
    samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let seed = sample_seed(seed, round, i);
            match mode {
                Augmentation::Off => Ok(Vec::new()),
                Augmentation::Seas => epida_augment(scorer, s, i, augmenter, cfg, seed),
                Augmentation::Random => random_selection(scorer, s, i, augmenter, cfg, seed),
            }
        })
        .collect()
}

fn build_items(model: &Model, samples: &[Sample], groups: Option<&[Vec<Candidate>]>) -> Result<Vec<TrainItem>> {
    samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let augmented = match groups {
                Some(g) => g[i].iter().map(|c| model.featurize(&c.text)).collect::<Result<_>>()?,
                None => Vec::new(),
            };
            Ok(TrainItem {
                features: model.featurize(&s.text)?,
                label: s.label,
                augmented,
            })
        })
        .collect()
}

fn run_seed(
    train: &Dataset,
    test: &Dataset,
    cfg: &RunConfig,
    seed: u64,
    augmenter: &dyn Augmenter,
    oracle: Option<&dyn LabelingOracle>,
) -> Result<SeedReport> {
    let samples = subsample(&train.samples, cfg.data_fraction, seed);
    let model = Model::new(cfg.featurizer.clone(), train.labels.clone())?;
    let plain = build_items(&model, &samples, None)?;
    let mut trainer = Trainer::new(model, TrainConfig { seed, ..cfg.train.clone() })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cfg.pretrain_epochs {
        trainer.train_epoch(&plain, &mut rng)?;
    }

    let mut selected_all = Vec::new();
    let mut augmented: Option<Vec<TrainItem>> = None;
    for round in 0..cfg.oa_epochs {
        if cfg.augmentation != Augmentation::Off && (cfg.online || augmented.is_none()) {
            let snapshot = trainer.model().clone();
            let groups = augment_dataset(&snapshot, &samples, augmenter, &cfg.seas, cfg.augmentation, seed, round)?;
            augmented = Some(build_items(&snapshot, &samples, Some(&groups))?);
            selected_all.extend(groups.into_iter().flatten());
        }
        trainer.train_epoch(augmented.as_deref().unwrap_or(&plain), &mut rng)?;
    }

    let model = trainer.into_model();
    let predictions = test
        .samples
        .par_iter()
        .map(|s| model.predict(&s.text))
        .collect::<Result<Vec<_>>>()?;
    let gold: Vec<usize> = test.samples.iter().map(|s| s.label).collect();
    let f1 = evaluate_macro_f1(&predictions, &gold, test.num_classes())?;
    let quality = if selected_all.is_empty() {
        None
    } else {
        Some(quality_diversity_metrics(&samples, &selected_all, &cfg.featurizer, oracle)?)
    };
    Ok(SeedReport {
        seed,
        train_size: samples.len(),
        metrics: MetricsReport::new(f1, quality),
    })
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = values.collect();
    v.filter(|v| !v.is_empty()).map(|v| v.iter().sum::<f64>() / v.len() as f64)
}

/// Pre-trains, augments and trains once per seed, then evaluates on `test`.
pub fn run_training(
    train: &Dataset,
    test: &Dataset,
    cfg: &RunConfig,
    augmenter: &dyn Augmenter,
    oracle: Option<&dyn LabelingOracle>,
) -> Result<RunReport> {
    cfg.validate()?;
    train.validate()?;
    test.validate()?;
    if train.labels != test.labels {
        return Err(Error::Config("train and test label vocabularies differ".into()));
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::Domain("train and test splits must be non-empty".into()));
    }
    let seeds = cfg
        .seeds
        .iter()
        .map(|&seed| {
            run_seed(train, test, cfg, seed, augmenter, oracle).map_err(|e| e.context(format!("seed {seed}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunReport {
        mean_macro_f1: seeds.iter().map(|s| s.metrics.macro_f1).sum::<f64>() / seeds.len() as f64,
        mean_error_rate: mean(seeds.iter().map(|s| s.metrics.error_rate)),
        mean_distance: mean(seeds.iter().map(|s| s.metrics.mean_distance)),
        seeds,
    })
}
