//! Softmax linear classifier over hashed n-grams, trained with AdamW.

mod checkpoint;
mod features;
mod model;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use features::{featurize, FeatureVector, FeaturizerConfig};
pub use model::{AugmentedGroup, Gradient, Model, Scorer, TrainItem};
pub use train::{featurize_samples, pretrain, AdamW, LossReport, TrainConfig, Trainer};
