//! Precision/recall evaluation and annotation surprise.

use serde::{Deserialize, Serialize};

use super::features::featurize;
use super::labels::Example;
use super::model::{ExtractorModel, ModelError};
use super::train::{mean_bce, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    /// 1 when nothing is predicted positive.
    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            1.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    /// 1 when there is nothing to find.
    pub fn recall(&self) -> f64 {
        if self.tp + self.fn_ == 0 {
            1.0
        } else {
            self.tp as f64 / (self.tp + self.fn_) as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let d = 2 * self.tp + self.fp + self.fn_;
        if d == 0 {
            0.0
        } else {
            2.0 * self.tp as f64 / d as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub counts: Confusion,
}

/// Precision and recall at every distinct score, thresholds ascending.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PRCurve {
    pub points: Vec<PrPoint>,
    pub positives: usize,
    pub negatives: usize,
}

impl PRCurve {
    /// Builds the curve for "keep when score >= threshold".
    pub fn from_scores(scored: &[(f64, bool)]) -> Self {
        let mut s: Vec<(f64, bool)> = scored.to_vec();
        s.sort_by(|a, b| a.0.total_cmp(&b.0));
        let positives = s.iter().filter(|x| x.1).count();
        let negatives = s.len() - positives;
        let mut points = Vec::new();
        // lines strictly below the current threshold
        let (mut pos_below, mut neg_below) = (0, 0);
        let mut i = 0;
        while i < s.len() {
            let t = s[i].0;
            let counts = Confusion {
                tp: positives - pos_below,
                fp: negatives - neg_below,
                fn_: pos_below,
                tn: neg_below,
            };
            points.push(PrPoint {
                threshold: t,
                precision: counts.precision(),
                recall: counts.recall(),
                counts,
            });
            while i < s.len() && s[i].0 == t {
                if s[i].1 {
                    pos_below += 1;
                } else {
                    neg_below += 1;
                }
                i += 1;
            }
        }
        Self {
            points,
            positives,
            negatives,
        }
    }

    /// Confusion counts when keeping scores `>= threshold`.
    pub fn confusion_at(&self, threshold: f64) -> Confusion {
        match self.points.iter().find(|p| p.threshold >= threshold) {
            Some(p) => p.counts,
            None => Confusion {
                tp: 0,
                fp: 0,
                fn_: self.positives,
                tn: self.negatives,
            },
        }
    }

    pub fn f1_at(&self, threshold: f64) -> f64 {
        self.confusion_at(threshold).f1()
    }

    /// Threshold with the highest F1; the lowest such threshold on ties.
    pub fn best_threshold(&self) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for p in &self.points {
            let f1 = p.counts.f1();
            if best.is_none_or(|(_, b)| f1 > b) {
                best = Some((p.threshold, f1));
            }
        }
        best
    }
}

/// (score, keep) for every labelled non-blank line.
pub fn scored_lines(model: &ExtractorModel, examples: &[Example]) -> Result<Vec<(f64, bool)>, ModelError> {
    let mut out = Vec::new();
    for ex in examples.iter().filter(|e| !e.labels.ignored) {
        let scores = model.score_lines(&ex.doc)?;
        let feats = featurize(&ex.doc);
        for l in &ex.labels.labels {
            if feats.get(l.line_index).is_some_and(Option::is_some) {
                out.push((scores[l.line_index], l.keep));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: Confusion,
    pub curve: PRCurve,
}

/// Evaluates at the model's own threshold.
pub fn evaluate(model: &ExtractorModel, val: &[Example]) -> Result<Evaluation, ModelError> {
    evaluate_at(model, val, model.threshold)
}

pub fn evaluate_at(model: &ExtractorModel, val: &[Example], threshold: f64) -> Result<Evaluation, ModelError> {
    let curve = PRCurve::from_scores(&scored_lines(model, val)?);
    let counts = curve.confusion_at(threshold);
    Ok(Evaluation {
        threshold,
        precision: counts.precision(),
        recall: counts.recall(),
        f1: counts.f1(),
        counts,
        curve,
    })
}

/// Threshold with the best F1 over `examples`, or the model's own threshold
/// when there is nothing to score.
pub fn tune_threshold(model: &ExtractorModel, examples: &[Example]) -> Result<f64, ModelError> {
    let curve = PRCurve::from_scores(&scored_lines(model, examples)?);
    Ok(curve.best_threshold().map_or(model.threshold, |(t, _)| t))
}

/// Mean BCE of a model over one annotated example.
pub fn example_loss(model: &ExtractorModel, example: &Example) -> Result<f64, ModelError> {
    model.check()?;
    let ds = Dataset::from_examples(std::slice::from_ref(example));
    if ds.is_empty() {
        return Ok(0.0);
    }
    Ok(mean_bce(&ds, &model.weights, model.bias))
}

/// Loss under `prev` minus loss under `new`. Positive when the new model
/// explains the example better.
pub fn surprise(prev: &ExtractorModel, new: &ExtractorModel, example: &Example) -> Result<f64, ModelError> {
    if prev.schema_version != new.schema_version {
        return Err(ModelError::Schema {
            model: new.schema_version,
            featurizer: prev.schema_version,
        });
    }
    Ok(example_loss(prev, example)? - example_loss(new, example)?)
}
