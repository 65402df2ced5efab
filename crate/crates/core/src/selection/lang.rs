//! Character-trigram language identification.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Texts shorter than this (in characters) are not scored.
pub const MIN_CHARS: usize = 20;

const SMOOTHING: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Sv,
    Da,
    No,
    Is,
    Other,
}

impl Language {
    pub const ALL: [Language; 5] = [Self::Sv, Self::Da, Self::No, Self::Is, Self::Other];
    pub const SCANDINAVIAN: [Language; 4] = [Self::Sv, Self::Da, Self::No, Self::Is];

    pub fn code(self) -> &'static str {
        match self {
            Self::Sv => "sv",
            Self::Da => "da",
            Self::No => "no",
            Self::Is => "is",
            Self::Other => "other",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_scandinavian(self) -> bool {
        self != Self::Other
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown language code {0:?}")]
pub struct UnknownLanguage(pub String);

impl FromStr for Language {
    type Err = UnknownLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Language::ALL
            .into_iter()
            .find(|l| l.code() == s)
            .ok_or_else(|| UnknownLanguage(s.to_string()))
    }
}

/// Per-language scores in `[0, 1]`, indexed by [`Language::index`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LanguageScores(pub [f64; 5]);

impl LanguageScores {
    pub fn undetectable() -> Self {
        Self([0.0; 5])
    }

    pub fn from_pairs(pairs: &[(Language, f64)]) -> Self {
        let mut s = [0.0; 5];
        for &(lang, score) in pairs {
            s[lang.index()] = score;
        }
        Self(s)
    }

    pub fn get(&self, lang: Language) -> f64 {
        self.0[lang.index()]
    }

    /// Highest-scoring Scandinavian language; ties go to the earlier code
    /// in `sv, da, no, is` order.
    pub fn best_scandinavian(&self) -> (Language, f64) {
        let mut best = (Language::Sv, self.get(Language::Sv));
        for lang in &Language::SCANDINAVIAN[1..] {
            let s = self.get(*lang);
            if s > best.1 {
                best = (*lang, s);
            }
        }
        best
    }

    pub fn argmax(&self) -> Language {
        let mut best = Language::Sv;
        for lang in Language::ALL {
            if self.get(lang) > self.get(best) {
                best = lang;
            }
        }
        best
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Anything that can score text for the five language classes.
pub trait LanguageDetector: Send + Sync {
    fn detect(&self, text: &str) -> LanguageScores;
}

/// Multinomial naive Bayes over character trigrams.
#[derive(Debug, Clone)]
pub struct TrigramClassifier {
    log_probs: HashMap<u64, [f64; 5]>,
    unseen: [f64; 5],
}

fn pack(a: char, b: char, c: char) -> u64 {
    ((a as u64) << 42) | ((b as u64) << 21) | c as u64
}

/// Lowercased letters with every other run of characters collapsed to one
/// space, padded with a space at both ends.
fn prepare(text: &str) -> Vec<char> {
    let mut out = vec![' '];
    for ch in text.chars() {
        if ch.is_alphabetic() {
            out.extend(ch.to_lowercase());
        } else if out.last() != Some(&' ') {
            out.push(' ');
        }
    }
    if out.last() != Some(&' ') {
        out.push(' ');
    }
    out
}

fn trigrams(text: &str) -> impl Iterator<Item = u64> {
    let chars = prepare(text);
    (0..chars.len().saturating_sub(2))
        .map(move |i| pack(chars[i], chars[i + 1], chars[i + 2]))
        .collect::<Vec<_>>()
        .into_iter()
}

impl TrigramClassifier {
    /// Trains from labelled text. Several samples may share a language.
    pub fn train<'a>(samples: impl IntoIterator<Item = (Language, &'a str)>) -> Self {
        let mut counts: HashMap<u64, [u64; 5]> = HashMap::new();
        let mut totals = [0u64; 5];
        for (lang, text) in samples {
            let i = lang.index();
            for t in trigrams(text) {
                counts.entry(t).or_default()[i] += 1;
                totals[i] += 1;
            }
        }
        // one extra vocabulary slot for trigrams never seen in training
        let vocab = counts.len() as f64 + 1.0;
        let denom: Vec<f64> = totals.iter().map(|&t| t as f64 + SMOOTHING * vocab).collect();
        let unseen = std::array::from_fn(|i| (SMOOTHING / denom[i]).ln());
        let log_probs = counts
            .into_iter()
            .map(|(t, c)| {
                let lp = std::array::from_fn(|i| ((c[i] as f64 + SMOOTHING) / denom[i]).ln());
                (t, lp)
            })
            .collect();
        Self { log_probs, unseen }
    }

    /// Classifier trained on the seed corpora shipped with the crate.
    pub fn bundled() -> &'static TrigramClassifier {
        static MODEL: OnceLock<TrigramClassifier> = OnceLock::new();
        MODEL.get_or_init(|| TrigramClassifier::train(Language::ALL.map(|l| (l, seed_corpus(l)))))
    }

    /// Summed log-likelihood of the text's trigrams under each class.
    pub fn log_likelihoods(&self, text: &str) -> [f64; 5] {
        let mut ll = [0.0; 5];
        for t in trigrams(text) {
            let lp = self.log_probs.get(&t).unwrap_or(&self.unseen);
            for i in 0..5 {
                ll[i] += lp[i];
            }
        }
        ll
    }
}

impl LanguageDetector for TrigramClassifier {
    fn detect(&self, text: &str) -> LanguageScores {
        if text.chars().count() < MIN_CHARS {
            return LanguageScores::undetectable();
        }
        LanguageScores(softmax(self.log_likelihoods(text)))
    }
}

pub(crate) fn softmax(x: [f64; 5]) -> [f64; 5] {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp = x.map(|v| (v - max).exp());
    let z: f64 = exp.iter().sum();
    exp.map(|e| e / z)
}

/// The bundled seed text for a language.
pub fn seed_corpus(lang: Language) -> &'static str {
    match lang {
        Language::Sv => include_str!("../../data/seed/sv.txt"),
        Language::Da => include_str!("../../data/seed/da.txt"),
        Language::No => include_str!("../../data/seed/no.txt"),
        Language::Is => include_str!("../../data/seed/is.txt"),
        Language::Other => include_str!("../../data/seed/other.txt"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_text_is_undetectable() {
        let s = TrigramClassifier::bundled().detect("hej hej ok");
        assert_eq!(s, LanguageScores::undetectable());
    }

    #[test]
    fn deterministic() {
        let c = TrigramClassifier::bundled();
        let text = "Det här är en helt vanlig mening på svenska om vädret i dag.";
        assert_eq!(c.detect(text), c.detect(text));
    }

    #[test]
    fn scores_sum_to_one() {
        let s = TrigramClassifier::bundled().detect("Þetta er venjuleg setning á íslensku um veðrið.");
        assert!((s.sum() - 1.0).abs() < 1e-9);
        assert_eq!(s.argmax(), Language::Is);
    }

    #[test]
    fn codes_round_trip() {
        for l in Language::ALL {
            assert_eq!(l.code().parse::<Language>().unwrap(), l);
        }
        assert!("fi".parse::<Language>().is_err());
    }

    #[test]
    fn best_scandinavian_ignores_other() {
        let s = LanguageScores::from_pairs(&[(Language::Other, 0.9), (Language::Da, 0.05)]);
        assert_eq!(s.best_scandinavian(), (Language::Da, 0.05));
    }

    #[test]
    fn prepare_collapses_non_letters() {
        let p: String = prepare("Hej, 42 Världen!").into_iter().collect();
        assert_eq!(p, " hej världen ");
    }
}
