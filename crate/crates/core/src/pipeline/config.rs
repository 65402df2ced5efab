use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::filters::FilterConfig;
use crate::pii::PiiConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: toml::de::Error },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Where response records are read from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WarcSource {
    /// Directory of `*.warc.gz` files. Scanned for pointers unless
    /// `pointers` is set.
    pub dir: Option<PathBuf>,
    /// Base URL for ranged HTTP reads; needs `pointers`.
    pub base_url: Option<String>,
    /// Tab-separated pointer file (uri, path, offset, length).
    pub pointers: Option<PathBuf>,
    /// On-disk cache for HTTP reads.
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractorSettings {
    /// Model file. The bundled model is used when neither this nor
    /// `scores` is set.
    pub model: Option<PathBuf>,
    /// Precomputed per-line scores (JSONL of `{doc_id, scores}`).
    pub scores: Option<PathBuf>,
    /// Overrides the model's stored threshold. Required with `scores`.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub snapshot: String,
    /// Directory of `*.wet.gz` files; one output shard per file.
    pub wet_dir: PathBuf,
    pub warc: WarcSource,
    pub language_threshold: f64,
    pub extractor: ExtractorSettings,
    pub filters: FilterConfig,
    pub dedup_seed: u64,
    pub pii: PiiConfig,
    /// Worker threads; 0 means one per core.
    pub workers: usize,
    pub output_dir: PathBuf,
    /// Reuse shard results recorded in the manifest of a previous run.
    pub resume: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            snapshot: String::new(),
            wet_dir: PathBuf::new(),
            warc: WarcSource::default(),
            language_threshold: crate::selection::DEFAULT_THRESHOLD,
            extractor: ExtractorSettings::default(),
            filters: FilterConfig::default(),
            dedup_seed: 0,
            pii: PiiConfig::default(),
            workers: 0,
            output_dir: PathBuf::from("out"),
            resume: true,
        }
    }
}

fn unit_interval(name: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} = {v} is outside [0, 1]")))
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.snapshot.trim().is_empty() {
            return Err(ConfigError::Invalid("snapshot id is empty".into()));
        }
        unit_interval("language_threshold", self.language_threshold)?;
        unit_interval("filters.min_alnum_ratio", self.filters.min_alnum_ratio)?;
        if self.filters.max_heading_ratio.is_nan() || self.filters.max_heading_ratio < 0.0 {
            return Err(ConfigError::Invalid("filters.max_heading_ratio must be >= 0".into()));
        }
        if self.filters.min_entropy.is_nan() || self.filters.min_entropy < 0.0 {
            return Err(ConfigError::Invalid("filters.min_entropy must be >= 0".into()));
        }
        if let Some(t) = self.extractor.threshold {
            unit_interval("extractor.threshold", t)?;
        }
        if self.extractor.scores.is_some() {
            if self.extractor.model.is_some() {
                return Err(ConfigError::Invalid("extractor.model and extractor.scores are exclusive".into()));
            }
            if self.extractor.threshold.is_none() {
                return Err(ConfigError::Invalid("extractor.scores needs extractor.threshold".into()));
            }
        }
        if self.pii.email_pool.is_empty() {
            return Err(ConfigError::Invalid("pii.email_pool is empty".into()));
        }
        match (&self.warc.dir, &self.warc.base_url) {
            (Some(_), Some(_)) => Err(ConfigError::Invalid("warc.dir and warc.base_url are exclusive".into())),
            (None, None) => Err(ConfigError::Invalid("one of warc.dir or warc.base_url is required".into())),
            (None, Some(_)) if self.warc.pointers.is_none() => {
                Err(ConfigError::Invalid("warc.base_url needs warc.pointers".into()))
            }
            _ => Ok(()),
        }
    }
}
