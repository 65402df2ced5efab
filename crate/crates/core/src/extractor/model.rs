//! The line scoring model and threshold extraction.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{featurize, FEATURE_LEN, SCHEMA_VERSION};
use super::normalize::normalize_text;
use crate::html2md::{collapse_blank_runs, LineKind, MarkdownDocument};

/// Operating threshold used when none is configured.
pub const DEFAULT_THRESHOLD: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("model feature schema v{model} does not match featurizer v{featurizer}")]
    Schema { model: u32, featurizer: u32 },
    #[error("model has {got} weights, schema v{schema} needs {want}")]
    WeightCount { got: usize, want: usize, schema: u32 },
    #[error("threshold {0} outside (0, 1)")]
    Threshold(f64),
    #[error("{doc_id}: {got} scores for {want} lines")]
    ScoreCount {
        doc_id: String,
        got: usize,
        want: usize,
    },
    #[error("no scores for document {0}")]
    MissingScores(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
    /// SHA-256 over the training documents and labels, hex.
    pub training_set_hash: String,
    pub training_lines: usize,
    pub final_loss: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractorModel {
    pub schema_version: u32,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub threshold: f64,
    #[serde(default)]
    pub metadata: TrainingMetadata,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl ExtractorModel {
    /// All-zero model: every line scores 0.5.
    pub fn zeros() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            weights: vec![0.0; FEATURE_LEN],
            bias: 0.0,
            threshold: DEFAULT_THRESHOLD,
            metadata: TrainingMetadata::default(),
        }
    }

    pub fn check(&self) -> Result<(), ModelError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ModelError::Schema {
                model: self.schema_version,
                featurizer: SCHEMA_VERSION,
            });
        }
        if self.weights.len() != FEATURE_LEN {
            return Err(ModelError::WeightCount {
                got: self.weights.len(),
                want: FEATURE_LEN,
                schema: SCHEMA_VERSION,
            });
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(ModelError::Threshold(self.threshold));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let model: Self = serde_json::from_slice(&std::fs::read(path)?)?;
        model.check()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn logit(&self, features: &[f64]) -> f64 {
        self.weights.iter().zip(features).map(|(w, f)| w * f).sum::<f64>() + self.bias
    }

    /// One probability per line.
    pub fn score_lines(&self, doc: &MarkdownDocument) -> Result<Vec<f64>, ModelError> {
        self.check()?;
        let feats = featurize(doc);
        let raw: Vec<Option<f64>> = feats
            .iter()
            .map(|f| f.as_ref().map(|f| sigmoid(self.logit(f))))
            .collect();
        Ok(inherit_blank_scores(&raw))
    }
}

/// Fills blank-line slots with the previous non-blank score, or 0 at the start.
pub fn inherit_blank_scores(raw: &[Option<f64>]) -> Vec<f64> {
    let mut prev = 0.0;
    raw.iter()
        .map(|s| {
            if let Some(s) = s {
                prev = *s;
            }
            prev
        })
        .collect()
}

/// Keeps lines scoring at or above `threshold` and normalizes the result.
pub fn extract_with_scores(doc: &MarkdownDocument, scores: &[f64], threshold: f64) -> String {
    let kept = doc
        .lines
        .iter()
        .zip(scores)
        .filter(|(_, &s)| s >= threshold)
        .map(|(l, _)| l.text.as_str());
    normalize_text(&collapse_blank_runs(kept).join("\n"))
}

/// Scores with `model` and extracts at the model's threshold.
pub fn extract(doc: &MarkdownDocument, model: &ExtractorModel) -> Result<String, ModelError> {
    let scores = model.score_lines(doc)?;
    Ok(extract_with_scores(doc, &scores, model.threshold))
}

/// Scores computed elsewhere, keyed by document id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreFile(pub HashMap<String, Vec<f64>>);

#[derive(Deserialize)]
struct ScoreRow {
    doc_id: String,
    scores: Vec<f64>,
}

impl ScoreFile {
    /// Reads JSON lines of the form `{"doc_id": .., "scores": [..]}`.
    pub fn read<R: std::io::BufRead>(r: R) -> Result<Self, ModelError> {
        let mut map = HashMap::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: ScoreRow = serde_json::from_str(&line)?;
            map.insert(row.doc_id, row.scores);
        }
        Ok(Self(map))
    }

    pub fn scores_for(&self, doc_id: &str, doc: &MarkdownDocument) -> Result<&[f64], ModelError> {
        let s = self
            .0
            .get(doc_id)
            .ok_or_else(|| ModelError::MissingScores(doc_id.to_string()))?;
        if s.len() != doc.len() {
            return Err(ModelError::ScoreCount {
                doc_id: doc_id.to_string(),
                got: s.len(),
                want: doc.len(),
            });
        }
        Ok(s)
    }
}

/// Where line scores come from.
#[derive(Debug, Clone)]
pub enum Scorer {
    Model(ExtractorModel),
    External { scores: ScoreFile, threshold: f64 },
}

impl Scorer {
    pub fn threshold(&self) -> f64 {
        match self {
            Scorer::Model(m) => m.threshold,
            Scorer::External { threshold, .. } => *threshold,
        }
    }

    pub fn score(&self, doc_id: &str, doc: &MarkdownDocument) -> Result<Vec<f64>, ModelError> {
        match self {
            Scorer::Model(m) => m.score_lines(doc),
            Scorer::External { scores, .. } => Ok(scores.scores_for(doc_id, doc)?.to_vec()),
        }
    }

    pub fn extract(&self, doc_id: &str, doc: &MarkdownDocument) -> Result<String, ModelError> {
        let scores = self.score(doc_id, doc)?;
        Ok(extract_with_scores(doc, &scores, self.threshold()))
    }
}

/// Counts the lines of each kind kept by an extraction.
pub fn kept_kinds(doc: &MarkdownDocument, scores: &[f64], threshold: f64) -> [usize; 5] {
    let mut out = [0; 5];
    for (l, &s) in doc.lines.iter().zip(scores) {
        if s >= threshold && l.kind != LineKind::Blank {
            out[l.kind.slot()] += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> MarkdownDocument {
        MarkdownDocument::from_text("u", "d", text)
    }

    #[test]
    fn zero_model_scores_half() {
        let s = ExtractorModel::zeros().score_lines(&doc("a\nb\n\nc")).unwrap();
        assert_eq!(s, vec![0.5; 4]);
        assert_eq!(ExtractorModel::zeros().score_lines(&doc("only")).unwrap(), vec![0.5]);
    }

    #[test]
    fn schema_mismatch_names_versions() {
        let mut m = ExtractorModel::zeros();
        m.schema_version = 99;
        let err = m.score_lines(&doc("a")).unwrap_err().to_string();
        assert!(err.contains("v99") && err.contains(&format!("v{SCHEMA_VERSION}")), "{err}");
        let mut m = ExtractorModel::zeros();
        m.weights.pop();
        assert!(matches!(m.check(), Err(ModelError::WeightCount { .. })));
    }

    #[test]
    fn threshold_is_inclusive() {
        let d = doc("one\ntwo\nthree");
        assert_eq!(extract_with_scores(&d, &[0.04, 0.05, 0.9], 0.05), "two\nthree");
        assert_eq!(extract_with_scores(&d, &[1.0; 3], 0.05), "one\ntwo\nthree");
        assert_eq!(extract_with_scores(&d, &[0.0; 3], 0.05), "");
    }

    #[test]
    fn blank_lines_follow_previous_line() {
        assert_eq!(
            inherit_blank_scores(&[None, Some(0.9), None, Some(0.1), None]),
            vec![0.0, 0.9, 0.9, 0.1, 0.1]
        );
        let d = doc("keep\n\n\ndrop\n\nkeep2");
        let s = [0.9, 0.9, 0.9, 0.0, 0.0, 0.8];
        assert_eq!(extract_with_scores(&d, &s, 0.05), "keep\n\n\nkeep2");
    }

    #[test]
    fn score_file_checks_length() {
        let f = ScoreFile::read(&b"{\"doc_id\":\"a\",\"scores\":[0.1,0.2]}\n"[..]).unwrap();
        assert!(f.scores_for("a", &doc("x\ny")).is_ok());
        assert!(matches!(f.scores_for("a", &doc("x")), Err(ModelError::ScoreCount { .. })));
        assert!(matches!(f.scores_for("b", &doc("x")), Err(ModelError::MissingScores(_))));
    }
}
