//! Cloze (fill-in-the-gap) evaluation with a pluggable language model scorer.

use std::io::{BufRead, Write};
use std::process::{Command, Stdio};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::selection::{seed_corpus, Language};

pub const ALTERNATIVES: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClozeItem {
    /// Each maximal run of underscores is one gap.
    pub passage: String,
    pub alternatives: Vec<Vec<String>>,
    pub answer_index: usize,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ClozeError {
    #[error("alternative {alt} has {got} fills for {want} gaps")]
    FillCount { alt: usize, got: usize, want: usize },
    #[error("alternative index {0} out of range")]
    AltIndex(usize),
    #[error("expected {ALTERNATIVES} alternatives, found {0}")]
    AltCount(usize),
    #[error("answer index {0} out of range")]
    Answer(usize),
}

#[derive(Debug, thiserror::Error)]
pub enum ScorerError {
    #[error("scorer command failed: {0}")]
    Command(String),
    #[error("scorer output {0:?} is not a number")]
    Output(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Spans of gap markers as byte ranges.
fn gaps(passage: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let b = passage.as_bytes();
    let mut i = 0;
    while i < b.len() {
        if b[i] == b'_' {
            let start = i;
            while i < b.len() && b[i] == b'_' {
                i += 1;
            }
            out.push((start, i));
        } else {
            i += 1;
        }
    }
    out
}

impl ClozeItem {
    pub fn gap_count(&self) -> usize {
        gaps(&self.passage).len()
    }

    pub fn validate(&self) -> Result<(), ClozeError> {
        if self.alternatives.len() != ALTERNATIVES {
            return Err(ClozeError::AltCount(self.alternatives.len()));
        }
        if self.answer_index >= ALTERNATIVES {
            return Err(ClozeError::Answer(self.answer_index));
        }
        let want = self.gap_count();
        for (alt, fills) in self.alternatives.iter().enumerate() {
            if fills.len() != want {
                return Err(ClozeError::FillCount {
                    alt,
                    got: fills.len(),
                    want,
                });
            }
        }
        Ok(())
    }

    /// The passage with alternative `alt` written into its gaps.
    pub fn fill(&self, alt: usize) -> Result<String, ClozeError> {
        let fills = self.alternatives.get(alt).ok_or(ClozeError::AltIndex(alt))?;
        let spans = gaps(&self.passage);
        if fills.len() != spans.len() {
            return Err(ClozeError::FillCount {
                alt,
                got: fills.len(),
                want: spans.len(),
            });
        }
        let mut out = String::with_capacity(self.passage.len());
        let mut last = 0;
        for ((s, e), f) in spans.iter().zip(fills) {
            out.push_str(&self.passage[last..*s]);
            out.push_str(f);
            last = *e;
        }
        out.push_str(&self.passage[last..]);
        Ok(out)
    }
}

/// Total log-likelihood of a text under some language model.
pub trait LmScorer: Send + Sync {
    fn score(&self, text: &str) -> Result<f64, ScorerError>;
}

/// Gives every text the same score.
pub struct ConstantScorer(pub f64);

impl LmScorer for ConstantScorer {
    fn score(&self, _: &str) -> Result<f64, ScorerError> {
        Ok(self.0)
    }
}

/// Scores 0 for texts in its answer set, -1 otherwise. Only exact when
/// scoring full passages: with `spans_only` a distractor for one item can
/// be the answer to another.
pub struct OracleScorer {
    answers: std::collections::HashSet<String>,
}

impl OracleScorer {
    pub fn new(items: &[ClozeItem], opts: &ScoreOptions) -> Self {
        let answers = items
            .iter()
            .filter_map(|it| scored_text(it, it.answer_index, opts).ok())
            .collect();
        Self { answers }
    }
}

impl LmScorer for OracleScorer {
    fn score(&self, text: &str) -> Result<f64, ScorerError> {
        Ok(if self.answers.contains(text) { 0.0 } else { -1.0 })
    }
}

/// Pseudo-random score in `[-1, 0)`, fixed per (seed, text).
pub struct RandomScorer(pub u64);

impl LmScorer for RandomScorer {
    fn score(&self, text: &str) -> Result<f64, ScorerError> {
        let h = xxh3_64_with_seed(text.as_bytes(), self.0);
        Ok(-((h >> 11) as f64 + 1.0) / (1u64 << 53) as f64)
    }
}

/// Runs `sh -c <command>` per text: text on stdin, one float on stdout.
pub struct CommandScorer {
    pub command: String,
}

impl LmScorer for CommandScorer {
    fn score(&self, text: &str) -> Result<f64, ScorerError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()?;
        child.stdin.take().expect("piped stdin").write_all(text.as_bytes())?;
        let out = child.wait_with_output()?;
        if !out.status.success() {
            return Err(ScorerError::Command(String::from_utf8_lossy(&out.stderr).trim().to_string()));
        }
        let s = String::from_utf8_lossy(&out.stdout).trim().to_string();
        s.parse().map_err(|_| ScorerError::Output(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScoreOptions {
    /// Score only the filled-in text rather than the whole passage.
    pub spans_only: bool,
    /// Divide by the number of whitespace tokens scored.
    pub length_normalize: bool,
}

fn scored_text(item: &ClozeItem, alt: usize, opts: &ScoreOptions) -> Result<String, ClozeError> {
    if opts.spans_only {
        item.alternatives
            .get(alt)
            .map(|f| f.join(" "))
            .ok_or(ClozeError::AltIndex(alt))
    } else {
        item.fill(alt)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemResult {
    pub index: usize,
    pub choice: Option<usize>,
    pub correct: bool,
    pub scores: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClozeReport {
    /// Over items that scored without error; 0 when there are none.
    pub accuracy: f64,
    pub scored: usize,
    pub errored: usize,
    pub items: Vec<ItemResult>,
}

/// Index of the highest score; the lowest index wins ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

fn score_item(index: usize, item: &ClozeItem, scorer: &dyn LmScorer, opts: &ScoreOptions) -> ItemResult {
    let attempt = || -> Result<Vec<f64>, String> {
        item.validate().map_err(|e| e.to_string())?;
        (0..ALTERNATIVES)
            .map(|alt| {
                let text = scored_text(item, alt, opts).map_err(|e| e.to_string())?;
                let mut s = scorer.score(&text).map_err(|e| e.to_string())?;
                if opts.length_normalize {
                    s /= text.split_whitespace().count().max(1) as f64;
                }
                if s.is_nan() {
                    return Err("scorer returned NaN".to_string());
                }
                Ok(s)
            })
            .collect()
    };
    match attempt() {
        Ok(scores) => {
            let choice = argmax(&scores);
            ItemResult {
                index,
                choice: Some(choice),
                correct: choice == item.answer_index,
                scores,
                error: None,
            }
        }
        Err(e) => ItemResult {
            index,
            choice: None,
            correct: false,
            scores: Vec::new(),
            error: Some(e),
        },
    }
}

/// Picks the best-scoring alternative for every item.
pub fn evaluate(items: &[ClozeItem], scorer: &dyn LmScorer, opts: &ScoreOptions) -> ClozeReport {
    let results: Vec<ItemResult> = items
        .par_iter()
        .enumerate()
        .map(|(i, it)| score_item(i, it, scorer, opts))
        .collect();
    let scored = results.iter().filter(|r| r.error.is_none()).count();
    let correct = results.iter().filter(|r| r.correct).count();
    ClozeReport {
        accuracy: if scored == 0 { 0.0 } else { correct as f64 / scored as f64 },
        scored,
        errored: results.len() - scored,
        items: results,
    }
}

pub fn read_items<R: BufRead>(r: R) -> Result<Vec<ClozeItem>, crate::extractor::labels::JsonlError> {
    crate::extractor::labels::read_jsonl(r)
}

/// Items cut from the seed corpora: one or two words of a sentence are
/// gapped, and three other alternatives are drawn from the same corpus.
pub fn synthetic_items(n: usize, seed: u64) -> Vec<ClozeItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sentences: Vec<&str> = seed_corpus(Language::Sv)
        .lines()
        .flat_map(|p| p.split_inclusive(". "))
        .map(str::trim)
        .filter(|s| s.split_whitespace().count() >= 8 && !s.contains('_'))
        .collect();
    let vocab: Vec<&str> = sentences
        .iter()
        .flat_map(|s| s.split_whitespace())
        .filter(|w| w.chars().all(char::is_alphabetic) && w.chars().count() >= 4)
        .collect();
    let mut items = Vec::with_capacity(n);
    while items.len() < n {
        let words: Vec<&str> = sentences[rng.gen_range(0..sentences.len())].split_whitespace().collect();
        let k = rng.gen_range(1..=2);
        let mut slots: Vec<usize> = (1..words.len() - 1)
            .filter(|&i| words[i].chars().all(char::is_alphabetic) && words[i].chars().count() >= 4)
            .collect();
        if slots.len() < k {
            continue;
        }
        slots.shuffle(&mut rng);
        let mut slots = slots[..k].to_vec();
        slots.sort_unstable();
        let answer: Vec<String> = slots.iter().map(|&i| words[i].to_string()).collect();
        let mut alternatives = vec![answer.clone()];
        while alternatives.len() < ALTERNATIVES {
            let alt: Vec<String> = (0..k).map(|_| vocab[rng.gen_range(0..vocab.len())].to_string()).collect();
            if !alternatives.contains(&alt) {
                alternatives.push(alt);
            }
        }
        let answer_index = rng.gen_range(0..ALTERNATIVES);
        alternatives.swap(0, answer_index);
        let passage: Vec<&str> = words
            .iter()
            .enumerate()
            .map(|(i, w)| if slots.contains(&i) { "____" } else { w })
            .collect();
        items.push(ClozeItem {
            passage: passage.join(" "),
            alternatives,
            answer_index,
        });
    }
    items
}
