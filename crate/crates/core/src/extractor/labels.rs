//! Line annotations and the document store they refer to.

use std::io::{BufRead, Write};

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64;

use crate::html2md::MarkdownDocument;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineLabel {
    pub line_index: usize,
    pub keep: bool,
}

/// One annotator's verdict on one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineLabelSet {
    pub doc_id: String,
    #[serde(default)]
    pub labels: Vec<LineLabel>,
    #[serde(default)]
    pub ignored: bool,
    #[serde(default)]
    pub annotator: String,
    /// RFC 3339.
    #[serde(default)]
    pub timestamp: String,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LabelError {
    #[error("{doc_id}: line indices must be strictly increasing (at {line_index})")]
    Order { doc_id: String, line_index: usize },
    #[error("{doc_id}: line {line_index} out of bounds for {len} lines")]
    Bounds {
        doc_id: String,
        line_index: usize,
        len: usize,
    },
}

impl LineLabelSet {
    /// Labels every line: `keep` lines true, the rest false.
    pub fn from_keep(doc_id: impl Into<String>, n_lines: usize, keep: impl Fn(usize) -> bool) -> Self {
        Self {
            doc_id: doc_id.into(),
            labels: (0..n_lines)
                .map(|i| LineLabel {
                    line_index: i,
                    keep: keep(i),
                })
                .collect(),
            ignored: false,
            annotator: String::new(),
            timestamp: String::new(),
        }
    }

    pub fn validate(&self, n_lines: usize) -> Result<(), LabelError> {
        let mut prev: Option<usize> = None;
        for l in &self.labels {
            if prev.is_some_and(|p| l.line_index <= p) {
                return Err(LabelError::Order {
                    doc_id: self.doc_id.clone(),
                    line_index: l.line_index,
                });
            }
            if l.line_index >= n_lines {
                return Err(LabelError::Bounds {
                    doc_id: self.doc_id.clone(),
                    line_index: l.line_index,
                    len: n_lines,
                });
            }
            prev = Some(l.line_index);
        }
        Ok(())
    }

    pub fn kept(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels.iter().filter(|l| l.keep).map(|l| l.line_index)
    }
}

/// A stored Markdown document, one JSON object per line in a document file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub url: String,
    #[serde(default)]
    pub warc_date: String,
    pub markdown: String,
}

impl DocumentRecord {
    pub fn new(doc_id: impl Into<String>, doc: &MarkdownDocument) -> Self {
        Self {
            doc_id: doc_id.into(),
            url: doc.url.clone(),
            warc_date: doc.warc_date.clone(),
            markdown: doc.to_text(),
        }
    }

    pub fn document(&self) -> MarkdownDocument {
        MarkdownDocument::from_text(&self.url, &self.warc_date, &self.markdown)
    }
}

/// A document paired with its labels.
#[derive(Debug, Clone)]
pub struct Example {
    pub doc: MarkdownDocument,
    pub labels: LineLabelSet,
}

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(r: R) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| JsonlError::Json { line: i + 1, source })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize, W: Write>(mut w: W, items: &[T]) -> std::io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Joins documents and labels by `doc_id`, dropping ignored and unmatched
/// annotations. When a document was annotated more than once the last
/// label set wins.
pub fn join(docs: &[DocumentRecord], labels: &[LineLabelSet]) -> Result<Vec<Example>, LabelError> {
    let by_id: std::collections::HashMap<&str, &DocumentRecord> =
        docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let mut latest: std::collections::BTreeMap<&str, &LineLabelSet> = Default::default();
    for l in labels {
        latest.insert(&l.doc_id, l);
    }
    let mut out = Vec::new();
    for (id, l) in latest {
        let Some(rec) = by_id.get(id) else { continue };
        if l.ignored {
            continue;
        }
        let doc = rec.document();
        l.validate(doc.len())?;
        out.push(Example {
            doc,
            labels: l.clone(),
        });
    }
    Ok(out)
}

/// Splits examples into (train, validation), holding out the `n_val`
/// documents with the smallest `doc_id` hashes. At least one document is
/// always left for training.
pub fn split_validation(mut examples: Vec<Example>, n_val: usize) -> (Vec<Example>, Vec<Example>) {
    examples.sort_by_key(|e| (xxh3_64(e.labels.doc_id.as_bytes()), e.labels.doc_id.clone()));
    let n_val = n_val.min(examples.len().saturating_sub(1));
    let train = examples.split_off(n_val);
    (train, examples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(idx: &[usize]) -> LineLabelSet {
        LineLabelSet {
            doc_id: "d".into(),
            labels: idx.iter().map(|&i| LineLabel { line_index: i, keep: true }).collect(),
            ignored: false,
            annotator: "a".into(),
            timestamp: "2024-01-01T00:00:00Z".into(),
        }
    }

    #[test]
    fn validation() {
        assert!(set(&[0, 2, 5]).validate(6).is_ok());
        assert!(matches!(set(&[0, 2, 2]).validate(6), Err(LabelError::Order { .. })));
        assert!(matches!(set(&[1, 0]).validate(6), Err(LabelError::Order { .. })));
        assert!(matches!(set(&[6]).validate(6), Err(LabelError::Bounds { .. })));
    }

    #[test]
    fn jsonl_round_trip() {
        let sets = vec![set(&[1, 3]), LineLabelSet { ignored: true, labels: vec![], ..set(&[]) }];
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &sets).unwrap();
        assert_eq!(read_jsonl::<LineLabelSet, _>(&buf[..]).unwrap(), sets);
        let minimal: Vec<LineLabelSet> = read_jsonl(&br#"{"doc_id":"x","ignored":true}"#[..]).unwrap();
        assert!(minimal[0].labels.is_empty());
    }

    #[test]
    fn split_is_stable_and_sized() {
        let ex: Vec<Example> = (0..30)
            .map(|i| Example {
                doc: MarkdownDocument::from_text("u", "d", "x"),
                labels: LineLabelSet::from_keep(format!("doc{i}"), 1, |_| true),
            })
            .collect();
        let (t1, v1) = split_validation(ex.clone(), 10);
        let mut rev = ex.clone();
        rev.reverse();
        let (_, v2) = split_validation(rev, 10);
        assert_eq!((t1.len(), v1.len()), (20, 10));
        let ids = |v: &[Example]| v.iter().map(|e| e.labels.doc_id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&v1), ids(&v2));
        let (t, v) = split_validation(ex[..3].to_vec(), 100);
        assert_eq!((t.len(), v.len()), (1, 2));
    }
}
