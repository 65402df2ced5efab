//! Full-batch gradient descent on mean binary cross-entropy.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::features::{featurize, FEATURE_LEN, SCHEMA_VERSION};
use super::labels::Example;
use super::model::{ExtractorModel, TrainingMetadata, DEFAULT_THRESHOLD};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
    pub threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-4,
            seed: 0,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TrainError {
    #[error("no labelled non-blank lines to train on")]
    Empty,
}

/// Labelled feature rows, grouped by source document.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub dim: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub groups: Vec<Range<usize>>,
}

impl Dataset {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    /// Appends rows as one group.
    pub fn push_group<'a>(&mut self, rows: impl IntoIterator<Item = (&'a [f64], bool)>) {
        let start = self.len();
        for (f, keep) in rows {
            assert_eq!(f.len(), self.dim);
            self.x.extend_from_slice(f);
            self.y.push(if keep { 1.0 } else { 0.0 });
        }
        if self.len() > start {
            self.groups.push(start..self.len());
        }
    }

    /// Labelled non-blank lines of the examples. Blank lines carry no
    /// prediction of their own and are skipped.
    pub fn from_examples(examples: &[Example]) -> Self {
        let mut ds = Self::new(FEATURE_LEN);
        for ex in examples {
            if ex.labels.ignored {
                continue;
            }
            let feats = featurize(&ex.doc);
            ds.push_group(ex.labels.labels.iter().filter_map(|l| {
                feats
                    .get(l.line_index)
                    .and_then(|f| f.as_ref())
                    .map(|f| (&f[..], l.keep))
            }));
        }
        ds
    }
}

/// Fixed-point accumulator. Integer addition is associative, so a sum
/// does not depend on how its terms were ordered or grouped.
#[derive(Clone, Copy, Default)]
struct Exact(i128);

const SCALE: f64 = (1u128 << 80) as f64;

impl Exact {
    fn add(&mut self, v: f64) {
        self.0 += (v * SCALE) as i128;
    }

    fn value(self) -> f64 {
        self.0 as f64 / SCALE
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    super::model::sigmoid(z)
}

/// Mean BCE plus `l2 / 2 * |w|^2`, and its gradient with respect to
/// `(w, b)`. The gradient has `dim + 1` entries, bias last.
pub fn loss_and_grad(ds: &Dataset, w: &[f64], b: f64, l2: f64) -> (f64, Vec<f64>) {
    let dim = ds.dim;
    let mut loss = Exact::default();
    let mut grad = vec![Exact::default(); dim + 1];
    let mut part = vec![0.0; dim + 1];
    for g in &ds.groups {
        part.iter_mut().for_each(|v| *v = 0.0);
        let mut part_loss = 0.0;
        for i in g.clone() {
            let x = ds.row(i);
            let z = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b;
            let y = ds.y[i];
            part_loss += softplus(z) - y * z;
            let r = sigmoid(z) - y;
            for (p, xi) in part.iter_mut().zip(x) {
                *p += r * xi;
            }
            part[dim] += r;
        }
        loss.add(part_loss);
        for (acc, p) in grad.iter_mut().zip(&part) {
            acc.add(*p);
        }
    }
    let n = ds.len() as f64;
    let reg: f64 = w.iter().map(|v| v * v).sum::<f64>() * l2 / 2.0;
    let mut out: Vec<f64> = grad.into_iter().map(|g| g.value() / n).collect();
    for (o, wi) in out.iter_mut().zip(w) {
        *o += l2 * wi;
    }
    (loss.value() / n + reg, out)
}

/// Mean BCE of `(w, b)` without regularization.
pub fn mean_bce(ds: &Dataset, w: &[f64], b: f64) -> f64 {
    loss_and_grad(ds, w, b, 0.0).0
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub loss: f64,
}

/// Gradient descent from small seeded random weights.
pub fn fit(ds: &Dataset, cfg: &TrainConfig) -> Result<Fit, TrainError> {
    if ds.is_empty() {
        return Err(TrainError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w: Vec<f64> = (0..ds.dim).map(|_| rng.gen_range(-0.01..0.01)).collect();
    let mut b = 0.0;
    for _ in 0..cfg.epochs {
        let (_, g) = loss_and_grad(ds, &w, b, cfg.l2);
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= cfg.learning_rate * gi;
        }
        b -= cfg.learning_rate * g[ds.dim];
    }
    let loss = mean_bce(ds, &w, b);
    Ok(Fit { weights: w, bias: b, loss })
}

/// Stable digest of the training examples.
pub fn training_set_hash(examples: &[Example]) -> String {
    let mut h = Sha256::new();
    for ex in examples {
        h.update(ex.labels.doc_id.as_bytes());
        h.update([0]);
        h.update(ex.doc.to_text().as_bytes());
        h.update([0]);
        for l in &ex.labels.labels {
            h.update((l.line_index as u64).to_le_bytes());
            h.update([l.keep as u8]);
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Trains a line scorer on annotated documents. Ignored documents are
/// skipped.
pub fn train(examples: &[Example], cfg: &TrainConfig) -> Result<ExtractorModel, TrainError> {
    let examples: Vec<Example> = examples.iter().filter(|e| !e.labels.ignored).cloned().collect();
    let ds = Dataset::from_examples(&examples);
    let fit = fit(&ds, cfg)?;
    let positives = ds.y.iter().filter(|&&y| y > 0.5).count();
    let mut warnings = Vec::new();
    if positives == 0 || positives == ds.len() {
        warnings.push("single-class".to_string());
    }
    Ok(ExtractorModel {
        schema_version: SCHEMA_VERSION,
        weights: fit.weights,
        bias: fit.bias,
        threshold: cfg.threshold,
        metadata: TrainingMetadata {
            epochs: cfg.epochs,
            learning_rate: cfg.learning_rate,
            l2: cfg.l2,
            seed: cfg.seed,
            training_set_hash: training_set_hash(&examples),
            training_lines: ds.len(),
            final_loss: fit.loss,
            warnings,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        let mut ds = Dataset::new(2);
        let rows = [([1.0, 0.2], true), ([0.9, -0.1], true), ([-1.0, 0.3], false), ([-0.8, 0.0], false)];
        ds.push_group(rows.iter().map(|(x, y)| (&x[..], *y)));
        ds
    }

    #[test]
    fn zero_model_loss_is_ln2() {
        let (loss, _) = loss_and_grad(&toy(), &[0.0, 0.0], 0.0, 0.0);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn descent_reduces_loss() {
        let ds = toy();
        let f = fit(&ds, &TrainConfig::default()).unwrap();
        assert!(f.loss < 0.3, "{}", f.loss);
    }

    #[test]
    fn empty_set_is_an_error() {
        assert_eq!(fit(&Dataset::new(3), &TrainConfig::default()), Err(TrainError::Empty));
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0 && softplus(-1000.0) < 1e-300);
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }
}
