//! End-to-end driver: datasets, the pre-train / online-augmentation loop,
//! metrics, export, remote scoring and the command line.

pub mod cli;
pub mod config;
mod dataset;
mod metrics;
pub mod remote;
mod run;
pub mod synthetic;

pub use dataset::{
    export_augmented, load_augmented, load_dataset, preprocess, Dataset, ExportRecord, Format, EMPTY_SENTINEL,
};
pub use metrics::{evaluate_macro_f1, quality_diversity_metrics, F1Report, LabelingOracle, MetricsReport, QualityDiversity};
pub use run::{
    augment_dataset, run_training, sample_seed, subsample, Augmentation, RunConfig, RunReport, ScorerKind, SeedReport,
};
