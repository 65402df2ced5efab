//! Per-line feature vectors for the linear line scorer.

use crate::html2md::{LineKind, MarkdownDocument};
use crate::selection::{Language, LanguageDetector, TrigramClassifier};

/// Bumped whenever the layout of [`featurize`] output changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Features describing a single line.
pub const BASE_LEN: usize = 14;
/// Neighbouring non-blank lines considered on each side.
pub const WINDOW: usize = 2;
pub const FEATURE_LEN: usize = BASE_LEN * (1 + 2 * WINDOW);

pub const BASE_NAMES: [&str; BASE_LEN] = [
    "char_length",
    "word_count",
    "link_like_token_ratio",
    "alnum_ratio",
    "stopword_ratio",
    "punctuation_ratio",
    "kind_heading",
    "kind_list_item",
    "kind_table_row",
    "kind_blank",
    "kind_paragraph",
    "relative_position",
    "ends_sentence",
    "edge_distance",
];

const SV: &[&str] = &[
    "och", "att", "det", "som", "en", "på", "är", "av", "för", "med", "till", "den", "har", "de",
    "inte", "om", "ett", "men", "var", "jag", "vi", "så", "kan", "man", "från", "eller", "när",
    "hade", "sig", "vid", "också", "efter", "där", "bara", "sina",
];
const DA: &[&str] = &[
    "og", "i", "at", "det", "er", "en", "til", "på", "af", "for", "med", "den", "har", "de", "ikke",
    "som", "om", "et", "men", "var", "jeg", "vi", "så", "kan", "man", "fra", "eller", "når", "havde",
    "sig", "ved", "også", "efter", "hvor", "kun",
];
const NO: &[&str] = &[
    "og", "i", "at", "det", "er", "en", "til", "på", "av", "for", "med", "den", "har", "de", "ikke",
    "som", "om", "et", "men", "var", "jeg", "vi", "så", "kan", "man", "fra", "eller", "når", "hadde",
    "seg", "ved", "også", "etter", "hvor", "bare",
];
const IS: &[&str] = &[
    "og", "í", "að", "á", "er", "sem", "til", "það", "ekki", "með", "um", "en", "var", "fyrir",
    "af", "við", "hann", "hún", "eru", "ég", "við", "þá", "þegar", "eða", "frá", "hefur", "voru",
    "þetta", "einnig", "eftir", "hafa", "sig",
];
const EN: &[&str] = &[
    "the", "and", "of", "to", "a", "in", "is", "that", "for", "it", "on", "was", "with", "as",
    "are", "be", "this", "by", "at", "or", "from", "not", "but", "have", "an", "they", "we", "you",
    "he", "she", "his", "her", "which", "their",
];

pub fn stopwords(lang: Language) -> &'static [&'static str] {
    match lang {
        Language::Sv => SV,
        Language::Da => DA,
        Language::No => NO,
        Language::Is => IS,
        Language::Other => EN,
    }
}

const TLDS: &[&str] = &[".se", ".dk", ".no", ".is", ".com", ".org", ".net", ".nu", ".eu", ".html", ".php"];

fn is_link_like(token: &str) -> bool {
    let t = token.trim_matches(|c: char| !c.is_alphanumeric() && c != '/');
    let lower = t.to_lowercase();
    lower.contains("://")
        || lower.starts_with("www.")
        || lower.contains('@')
        || (lower.contains('/') && lower.len() > 1)
        || TLDS.iter().any(|tld| lower.ends_with(tld))
}

fn ratio(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

/// Features of one line, ignoring its neighbours.
pub fn line_features(text: &str, kind: LineKind, position: f64, stop: &[&str]) -> [f64; BASE_LEN] {
    let chars = text.chars().count();
    let words: Vec<&str> = text.split_whitespace().collect();
    let alnum = text.chars().filter(|c| c.is_alphanumeric()).count();
    let punct = text
        .chars()
        .filter(|c| !c.is_alphanumeric() && !c.is_whitespace())
        .count();
    let non_space = text.chars().filter(|c| !c.is_whitespace()).count();
    let links = words.iter().filter(|w| is_link_like(w)).count();
    let stops = words
        .iter()
        .filter(|w| {
            let w = w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
            stop.contains(&w.as_str())
        })
        .count();
    let trimmed = text.trim_end().trim_end_matches(['*', ')', '"', '\'', '»', '”']);
    let ends_sentence = trimmed.ends_with(['.', '!', '?', ':']) && !trimmed.ends_with("...");
    let mut f = [0.0; BASE_LEN];
    f[0] = (1.0 + chars as f64).ln() / 7.0;
    f[1] = (1.0 + words.len() as f64).ln() / 5.0;
    f[2] = ratio(links, words.len());
    f[3] = ratio(alnum, non_space);
    f[4] = ratio(stops, words.len());
    f[5] = ratio(punct, non_space);
    f[6 + kind.slot()] = 1.0;
    f[11] = position;
    f[12] = if ends_sentence { 1.0 } else { 0.0 };
    f[13] = 2.0 * position.min(1.0 - position);
    f
}

/// Language used to pick the stopword list for a document.
pub fn document_language(doc: &MarkdownDocument) -> Language {
    let text = doc.to_text();
    let scores = TrigramClassifier::bundled().detect(&text);
    if scores.sum() == 0.0 {
        Language::Other
    } else {
        scores.argmax()
    }
}

/// One feature vector per line. Blank lines get `None`: their scores are
/// inherited rather than predicted.
pub fn featurize(doc: &MarkdownDocument) -> Vec<Option<[f64; FEATURE_LEN]>> {
    featurize_with(doc, stopwords(document_language(doc)))
}

pub fn featurize_with(doc: &MarkdownDocument, stop: &[&str]) -> Vec<Option<[f64; FEATURE_LEN]>> {
    let n = doc.lines.len();
    let denom = n.saturating_sub(1).max(1) as f64;
    let content: Vec<usize> = (0..n).filter(|&i| doc.lines[i].kind != LineKind::Blank).collect();
    let base: Vec<[f64; BASE_LEN]> = content
        .iter()
        .map(|&i| {
            let l = &doc.lines[i];
            line_features(&l.text, l.kind, i as f64 / denom, stop)
        })
        .collect();
    let mut out = vec![None; n];
    for (k, &i) in content.iter().enumerate() {
        let mut f = [0.0; FEATURE_LEN];
        f[..BASE_LEN].copy_from_slice(&base[k]);
        for d in 1..=WINDOW {
            let before = 1 + 2 * (d - 1);
            if let Some(b) = k.checked_sub(d).map(|j| &base[j]) {
                f[before * BASE_LEN..(before + 1) * BASE_LEN].copy_from_slice(b);
            }
            if let Some(a) = base.get(k + d) {
                f[(before + 1) * BASE_LEN..(before + 2) * BASE_LEN].copy_from_slice(a);
            }
        }
        out[i] = Some(f);
    }
    out
}
