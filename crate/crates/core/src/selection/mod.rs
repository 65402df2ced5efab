//! Stage 1: shard-level line dedup followed by language selection.

pub mod lang;

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_128;

use crate::archive::WetRecord;
pub use lang::{
    seed_corpus, Language, LanguageDetector, LanguageScores, TrigramClassifier, UnknownLanguage,
    MIN_CHARS,
};

/// Default selection threshold on the best Scandinavian score.
pub const DEFAULT_THRESHOLD: f64 = 0.2;

/// Hashes of normalized lines already seen in the current shard.
#[derive(Debug, Default)]
pub struct ShardState {
    seen: HashSet<u128>,
}

impl ShardState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }
}

/// Lowercase, digits removed, surrounding whitespace trimmed.
pub fn normalize_line(line: &str) -> String {
    line.trim()
        .chars()
        .filter(|c| !c.is_numeric())
        .flat_map(char::to_lowercase)
        .collect::<String>()
        .trim()
        .to_string()
}

/// Drops lines already seen in the shard and records left with no text.
pub fn dedup_lines(
    records: impl IntoIterator<Item = WetRecord>,
    state: &mut ShardState,
) -> Vec<WetRecord> {
    records
        .into_iter()
        .filter_map(|record| dedup_record(record, state))
        .collect()
}

/// Single-record form of [`dedup_lines`].
pub fn dedup_record(mut record: WetRecord, state: &mut ShardState) -> Option<WetRecord> {
    let kept: Vec<&str> = record
        .lines()
        .filter(|line| state.seen.insert(xxh3_128(normalize_line(line).as_bytes())))
        .collect();
    let text = kept.join("\n");
    if text.trim().is_empty() {
        return None;
    }
    record.text = text;
    Some(record)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub target_uri: String,
    /// WET archive the record came from.
    pub warc_path: String,
    pub warc_date: String,
    pub best_language: Language,
    pub best_score: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub deduped_text: String,
}

/// Scores a deduplicated record.
pub fn score_record(
    record: &WetRecord,
    warc_path: &str,
    detector: &dyn LanguageDetector,
) -> SelectionRecord {
    let (best_language, best_score) = detector.detect(&record.text).best_scandinavian();
    SelectionRecord {
        target_uri: record.target_uri.clone(),
        warc_path: warc_path.to_string(),
        warc_date: record.warc_date.clone(),
        best_language,
        best_score,
        deduped_text: record.text.clone(),
    }
}

pub fn is_selected(best_score: f64, threshold: f64) -> bool {
    best_score > threshold
}

/// Keeps records whose best Scandinavian score is strictly above `threshold`.
pub fn select(
    records: &[WetRecord],
    warc_path: &str,
    detector: &dyn LanguageDetector,
    threshold: f64,
) -> Vec<SelectionRecord> {
    records
        .iter()
        .map(|r| score_record(r, warc_path, detector))
        .filter(|s| is_selected(s.best_score, threshold))
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("line {line}: expected 5 tab-separated columns")]
    Columns { line: usize },
    #[error("line {line}: {source}")]
    Language { line: usize, source: UnknownLanguage },
    #[error("line {line}: bad score {value:?}")]
    Score { line: usize, value: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Writes the selection index: uri, path, date, language, score.
pub fn write_index<W: Write>(mut w: W, records: &[SelectionRecord]) -> std::io::Result<()> {
    for r in records {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            r.target_uri, r.warc_path, r.warc_date, r.best_language, r.best_score
        )?;
    }
    Ok(())
}

/// Reads an index written by [`write_index`]. `deduped_text` is left empty.
pub fn read_index<R: BufRead>(r: R) -> Result<Vec<SelectionRecord>, IndexError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let n = i + 1;
        let cols: Vec<&str> = line.split('\t').collect();
        let [uri, path, date, lang, score] = cols[..] else {
            return Err(IndexError::Columns { line: n });
        };
        out.push(SelectionRecord {
            target_uri: uri.to_string(),
            warc_path: path.to_string(),
            warc_date: date.to_string(),
            best_language: lang
                .parse()
                .map_err(|source| IndexError::Language { line: n, source })?,
            best_score: score.parse().map_err(|_| IndexError::Score {
                line: n,
                value: score.to_string(),
            })?,
            deduped_text: String::new(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(uri: &str, text: &str) -> WetRecord {
        WetRecord {
            target_uri: uri.into(),
            warc_date: "2023-01-01T00:00:00Z".into(),
            text: text.into(),
        }
    }

    struct Fixed(LanguageScores);

    impl LanguageDetector for Fixed {
        fn detect(&self, _: &str) -> LanguageScores {
            self.0
        }
    }

    #[test]
    fn repeated_line_dropped_in_second_record() {
        let mut st = ShardState::new();
        let out = dedup_lines(
            vec![rec("a", "Hello\nAccept cookies"), rec("b", "Accept cookies\nWorld")],
            &mut st,
        );
        assert_eq!(out[0].text, "Hello\nAccept cookies");
        assert_eq!(out[1].text, "World");
    }

    #[test]
    fn unique_lines_unchanged() {
        let mut st = ShardState::new();
        let r = rec("a", "one\ntwo\nthree");
        assert_eq!(dedup_lines(vec![r.clone()], &mut st), vec![r]);
    }

    #[test]
    fn fully_duplicated_record_dropped() {
        let mut st = ShardState::new();
        let out = dedup_lines(vec![rec("a", "x\ny"), rec("b", "Y\n X ")], &mut st);
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn normalization_ignores_digits_and_case() {
        assert_eq!(normalize_line("  Page 12 of 40 "), "page  of");
        assert_eq!(normalize_line("Page 3 of 9"), normalize_line("PAGE 7 OF 1"));
    }

    #[test]
    fn threshold_is_strict() {
        let r = vec![rec("a", "text")];
        let at = |s: f64| {
            let d = Fixed(LanguageScores::from_pairs(&[(Language::Sv, s)]));
            select(&r, "w", &d, DEFAULT_THRESHOLD).len()
        };
        assert_eq!(at(0.25), 1);
        assert_eq!(at(0.2), 0);
        let other = Fixed(LanguageScores::from_pairs(&[(Language::Other, 0.99), (Language::Da, 0.05)]));
        assert!(select(&r, "w", &other, DEFAULT_THRESHOLD).is_empty());
    }

    #[test]
    fn index_round_trip() {
        let recs = vec![SelectionRecord {
            target_uri: "https://example.se/a".into(),
            warc_path: "crawl/00000.warc.wet.gz".into(),
            warc_date: "2023-01-01T00:00:00Z".into(),
            best_language: Language::No,
            best_score: 0.8123456789,
            deduped_text: String::new(),
        }];
        let mut buf = Vec::new();
        write_index(&mut buf, &recs).unwrap();
        assert_eq!(read_index(&buf[..]).unwrap(), recs);
        assert!(matches!(read_index(&b"a\tb\n"[..]), Err(IndexError::Columns { line: 1 })));
    }
}
