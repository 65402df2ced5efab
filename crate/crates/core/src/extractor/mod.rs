//! Line-level primary content extraction from Markdown.

pub mod eval;
pub mod features;
pub mod labels;
pub mod model;
pub mod normalize;
pub mod synthetic;
pub mod train;

pub use eval::{evaluate, evaluate_at, surprise, tune_threshold, Confusion, Evaluation, PRCurve};
pub use features::{featurize, FEATURE_LEN, SCHEMA_VERSION};
pub use labels::{join, split_validation, DocumentRecord, Example, LineLabel, LineLabelSet};
pub use model::{extract, extract_with_scores, ExtractorModel, ModelError, ScoreFile, Scorer, DEFAULT_THRESHOLD};
pub use normalize::normalize_text;
pub use train::{train, TrainConfig, TrainError};
