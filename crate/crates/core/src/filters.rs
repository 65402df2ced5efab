//! Document-level quality filters.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::html2md::LineKind;

pub const CONTENT_LENGTH: &str = "content_length";
pub const ALNUM_RATIO: &str = "alnum_ratio";
pub const HEADING_RATIO: &str = "heading_ratio";
pub const UNIGRAM_ENTROPY: &str = "unigram_entropy";

/// All thresholds are strict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Fail when shorter than this many characters.
    pub min_length: usize,
    /// Fail when the alphanumeric ratio is below this.
    pub min_alnum_ratio: f64,
    /// Fail when headings per non-heading word exceed this.
    pub max_heading_ratio: f64,
    /// Fail when entropy (nats) is below this.
    pub min_entropy: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_length: 100,
            min_alnum_ratio: 0.4,
            max_heading_ratio: 0.05,
            min_entropy: 3.0,
        }
    }
}

mod maybe_infinite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("bad ratio {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub doc_id: String,
    pub content_length: usize,
    pub alnum_ratio: f64,
    /// `"inf"` in JSON when there are headings but no other words.
    #[serde(with = "maybe_infinite")]
    pub heading_ratio: f64,
    pub unigram_entropy: f64,
    pub passed: bool,
    pub failed_filters: Vec<String>,
}

/// Unicode scalar values, markup and newlines included.
pub fn content_length(text: &str) -> usize {
    text.chars().count()
}

/// Share of alphanumeric scalars; 0 for empty text.
pub fn alnum_ratio(text: &str) -> f64 {
    let total = text.chars().count();
    if total == 0 {
        return 0.0;
    }
    text.chars().filter(|c| c.is_alphanumeric()).count() as f64 / total as f64
}

/// Heading lines per whitespace-separated word on the other lines.
pub fn heading_ratio(text: &str) -> f64 {
    let mut headings = 0usize;
    let mut words = 0usize;
    for line in text.split('\n') {
        if LineKind::of(line).is_heading() {
            headings += 1;
        } else {
            words += line.split_whitespace().count();
        }
    }
    match (headings, words) {
        (0, _) => 0.0,
        (_, 0) => f64::INFINITY,
        (h, w) => h as f64 / w as f64,
    }
}

/// Tokens used for entropy: heading markers and asterisks stripped,
/// lowercased, edge punctuation trimmed.
pub fn entropy_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.split('\n') {
        let body = match LineKind::of(line) {
            LineKind::Heading(n) => &line[n as usize + 1..],
            _ => line,
        };
        let lower = body.replace('*', "").to_lowercase();
        for tok in lower.split_whitespace() {
            let t = tok.trim_matches(|c: char| !c.is_alphanumeric());
            if !t.is_empty() {
                out.push(t.to_string());
            }
        }
    }
    out
}

/// Shannon entropy of the token distribution in nats; 0 without tokens.
pub fn unigram_entropy(text: &str) -> f64 {
    let tokens = entropy_tokens(text);
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &tokens {
        *counts.entry(t).or_default() += 1;
    }
    let total = tokens.len() as f64;
    // sorted so the floating point sum does not depend on hash order
    let mut c: Vec<usize> = counts.into_values().collect();
    c.sort_unstable();
    c.iter()
        .map(|&x| {
            let p = x as f64 / total;
            -p * p.ln()
        })
        .sum()
}

/// Computes all four measurements and the resulting verdict.
pub fn apply_filters(doc_id: &str, text: &str, cfg: &FilterConfig) -> FilterVerdict {
    let content_length = content_length(text);
    let alnum_ratio = alnum_ratio(text);
    let heading_ratio = heading_ratio(text);
    let unigram_entropy = unigram_entropy(text);
    let mut failed = Vec::new();
    if content_length < cfg.min_length {
        failed.push(CONTENT_LENGTH.to_string());
    }
    if alnum_ratio < cfg.min_alnum_ratio {
        failed.push(ALNUM_RATIO.to_string());
    }
    if heading_ratio > cfg.max_heading_ratio {
        failed.push(HEADING_RATIO.to_string());
    }
    if unigram_entropy < cfg.min_entropy {
        failed.push(UNIGRAM_ENTROPY.to_string());
    }
    FilterVerdict {
        doc_id: doc_id.to_string(),
        content_length,
        alnum_ratio,
        heading_ratio,
        unigram_entropy,
        passed: failed.is_empty(),
        failed_filters: failed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_boundary() {
        let cfg = FilterConfig::default();
        let fails = |n: usize| {
            apply_filters("d", &"å".repeat(n), &cfg)
                .failed_filters
                .contains(&CONTENT_LENGTH.to_string())
        };
        assert!(fails(99));
        assert!(!fails(100));
        assert!(fails(0));
    }

    #[test]
    fn alnum_examples() {
        assert_eq!(alnum_ratio("ab12"), 1.0);
        assert_eq!(alnum_ratio("|---|---|"), 0.0);
        assert_eq!(alnum_ratio("abc def!"), 0.75);
        assert_eq!(alnum_ratio(""), 0.0);
    }

    #[test]
    fn heading_examples() {
        let words = |n: usize| vec!["ord"; n].join(" ");
        assert_eq!(heading_ratio(&format!("# T\n{}", words(40))), 0.025);
        assert_eq!(heading_ratio(&format!("# T\n{}", words(10))), 0.1);
        assert_eq!(heading_ratio("# a\n## b\n### c\n#### d\n##### e"), f64::INFINITY);
        assert_eq!(heading_ratio("no headings here"), 0.0);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(unigram_entropy("a a a a"), 0.0);
        assert_eq!(unigram_entropy(""), 0.0);
        assert_eq!(entropy_tokens("## **Hej** världen, (igen)!\n- x"), ["hej", "världen", "igen", "x"]);
    }

    #[test]
    fn infinite_ratio_round_trips_through_json() {
        let v = apply_filters("d", "# only", &FilterConfig::default());
        let json = serde_json::to_string(&v).unwrap();
        assert!(json.contains("\"heading_ratio\":\"inf\""), "{json}");
        let back: FilterVerdict = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }
}
