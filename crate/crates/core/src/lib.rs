//! Selection of augmented text samples by classifier feedback.
//!
//! For every input text an augmenter proposes `K·m` candidates. Each candidate
//! is scored for diversity (relative entropy of the classifier's prediction
//! against the source label) and quality (negated conditional entropy of the
//! prediction given the source's prediction). Both scores are min-max
//! normalized over the candidate pool, combined, and the best `m` are kept.
//!
//! - [`infotheory`]: scoring math
//! - [`augment`]: candidate generation
//! - [`classifier`]: the feedback model
//! - [`seas`]: scoring and selection
//! - [`pipeline`]: datasets, training loop, metrics, remote scoring, CLI

pub mod augment;
pub mod classifier;
pub mod error;
pub mod infotheory;
pub mod pipeline;
pub mod seas;
pub mod text;

pub use error::{Error, Result};
pub use text::{Sample, TokenizedText};
