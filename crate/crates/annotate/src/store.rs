//! Task pool and label persistence.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use nordcrawl_core::atomic::write_atomic;
use nordcrawl_core::extractor::labels::{JsonlError, LabelError};
use nordcrawl_core::extractor::{surprise, DocumentRecord, Example, ExtractorModel, LineLabel, LineLabelSet, ModelError};
use nordcrawl_core::html2md::{LineKind, MarkdownDocument};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Unlabeled,
    Labeled,
    Ignored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskLine {
    pub index: usize,
    pub text: String,
    pub kind: LineKind,
}

/// A document as served to annotators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub doc_id: String,
    pub url: String,
    pub warc_date: String,
    pub lines: Vec<TaskLine>,
    pub html: Option<String>,
    pub status: Status,
    /// Per-line keep probabilities from the configured model.
    pub scores: Option<Vec<f64>>,
    /// Latest stored labels.
    pub labels: Option<LineLabelSet>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StoreStats {
    pub total: usize,
    pub unlabeled: usize,
    pub labeled: usize,
    pub ignored: usize,
    /// Label sets written per annotator, including superseded ones.
    pub submissions: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewEntry {
    pub doc_id: String,
    pub delta: f64,
}

/// Body of a label submission.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelSubmission {
    #[serde(default)]
    pub doc_id: Option<String>,
    pub labels: Vec<LineLabel>,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("unknown task {0}")]
    NotFound(String),
    #[error("no unlabeled tasks left")]
    Exhausted,
    #[error("line {index}: {message}")]
    Validation { index: usize, message: String },
    #[error("{0}")]
    BadRequest(String),
    #[error("task {doc_id} is {status:?}; {action} not allowed")]
    Conflict {
        doc_id: String,
        status: Status,
        action: &'static str,
    },
    #[error("review needs both a previous and a new model")]
    NoModels,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Jsonl { path: String, source: JsonlError },
}

impl From<LabelError> for StoreError {
    fn from(e: LabelError) -> Self {
        let index = match &e {
            LabelError::Order { line_index, .. } | LabelError::Bounds { line_index, .. } => *line_index,
        };
        StoreError::Validation {
            index,
            message: e.to_string(),
        }
    }
}

struct Doc {
    record: DocumentRecord,
    doc: MarkdownDocument,
    html: Option<String>,
}

#[derive(Default)]
struct State {
    status: Vec<Status>,
    /// Sequence number of the last time each task was handed out or saved.
    touched: Vec<u64>,
    clock: u64,
    latest: HashMap<usize, LineLabelSet>,
    /// Raw file content per annotator.
    files: BTreeMap<String, Vec<u8>>,
    submissions: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default)]
pub struct StoreConfig {
    pub labels_dir: PathBuf,
    /// Supplies per-line scores in served tasks.
    pub model: Option<ExtractorModel>,
    /// Models compared by the review queue.
    pub review: Option<(ExtractorModel, ExtractorModel)>,
}

/// Documents plus the labels stored for them. Safe to share across threads.
pub struct TaskStore {
    docs: Vec<Doc>,
    by_id: HashMap<String, usize>,
    config: StoreConfig,
    state: Mutex<State>,
}

fn annotator_file_name(annotator: &str) -> String {
    let safe: String = annotator
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{}.jsonl", if safe.is_empty() { "anonymous".to_string() } else { safe })
}

pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl TaskStore {
    /// Builds the pool and replays any label files in `config.labels_dir`.
    /// Later documents with a repeated id are dropped.
    pub fn new(
        records: Vec<DocumentRecord>,
        html: HashMap<String, String>,
        config: StoreConfig,
    ) -> Result<Self, StoreError> {
        let mut docs = Vec::new();
        let mut by_id = HashMap::new();
        for record in records {
            if by_id.contains_key(&record.doc_id) {
                tracing::warn!(doc_id = %record.doc_id, "duplicate task id ignored");
                continue;
            }
            by_id.insert(record.doc_id.clone(), docs.len());
            let doc = record.document();
            let html = html.get(&record.doc_id).cloned();
            docs.push(Doc { record, doc, html });
        }
        let n = docs.len();
        let store = Self {
            docs,
            by_id,
            config,
            state: Mutex::new(State {
                status: vec![Status::Unlabeled; n],
                touched: vec![0; n],
                ..Default::default()
            }),
        };
        store.replay()?;
        Ok(store)
    }

    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
        move |source| StoreError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn replay(&self) -> Result<(), StoreError> {
        let dir = &self.config.labels_dir;
        fs::create_dir_all(dir).map_err(Self::io(dir))?;
        let mut names: Vec<String> = fs::read_dir(dir)
            .map_err(Self::io(dir))?
            .filter_map(|e| e.ok()?.file_name().into_string().ok())
            .filter(|n| n.ends_with(".jsonl"))
            .collect();
        names.sort();
        let mut all: Vec<(String, usize, LineLabelSet)> = Vec::new();
        let mut st = self.state.lock().unwrap();
        for name in names {
            let path = dir.join(&name);
            let bytes = fs::read(&path).map_err(Self::io(&path))?;
            let sets: Vec<LineLabelSet> =
                nordcrawl_core::extractor::labels::read_jsonl(&bytes[..]).map_err(|source| StoreError::Jsonl {
                    path: path.display().to_string(),
                    source,
                })?;
            let annotator = name.trim_end_matches(".jsonl").to_string();
            *st.submissions.entry(annotator.clone()).or_default() += sets.len();
            st.files.insert(annotator, bytes);
            all.extend(sets.into_iter().enumerate().map(|(i, s)| (name.clone(), i, s)));
        }
        // latest timestamp wins; file name and position break ties
        all.sort_by(|a, b| a.2.timestamp.cmp(&b.2.timestamp).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
        for (_, _, set) in all {
            let Some(&i) = self.by_id.get(&set.doc_id) else {
                tracing::warn!(doc_id = %set.doc_id, "labels for unknown task skipped");
                continue;
            };
            st.status[i] = if set.ignored { Status::Ignored } else { Status::Labeled };
            st.latest.insert(i, set);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    fn index(&self, doc_id: &str) -> Result<usize, StoreError> {
        self.by_id.get(doc_id).copied().ok_or_else(|| StoreError::NotFound(doc_id.to_string()))
    }

    fn task(&self, i: usize, st: &State) -> Result<AnnotationTask, StoreError> {
        let d = &self.docs[i];
        let scores = match &self.config.model {
            Some(m) => Some(m.score_lines(&d.doc)?),
            None => None,
        };
        Ok(AnnotationTask {
            doc_id: d.record.doc_id.clone(),
            url: d.record.url.clone(),
            warc_date: d.record.warc_date.clone(),
            lines: d
                .doc
                .lines
                .iter()
                .enumerate()
                .map(|(index, l)| TaskLine {
                    index,
                    text: l.text.clone(),
                    kind: l.kind,
                })
                .collect(),
            html: d.html.clone(),
            status: st.status[i],
            scores,
            labels: st.latest.get(&i).cloned(),
        })
    }

    pub fn get(&self, doc_id: &str) -> Result<AnnotationTask, StoreError> {
        let i = self.index(doc_id)?;
        let st = self.state.lock().unwrap();
        self.task(i, &st)
    }

    /// The unlabeled task handed out least recently, earliest in the pool
    /// on ties. Marks it as handed out.
    pub fn next(&self) -> Result<AnnotationTask, StoreError> {
        let mut st = self.state.lock().unwrap();
        let i = (0..self.docs.len())
            .filter(|&i| st.status[i] == Status::Unlabeled)
            .min_by_key(|&i| (st.touched[i], i))
            .ok_or(StoreError::Exhausted)?;
        st.clock += 1;
        st.touched[i] = st.clock;
        self.task(i, &st)
    }

    fn persist(&self, st: &mut State, i: usize, set: LineLabelSet) -> Result<(), StoreError> {
        let name = annotator_file_name(&set.annotator);
        let key = name.trim_end_matches(".jsonl").to_string();
        let path = self.config.labels_dir.join(&name);
        let mut bytes = st.files.get(&key).cloned().unwrap_or_default();
        serde_json::to_writer(&mut bytes, &set).expect("label set serializes");
        bytes.push(b'\n');
        write_atomic(&path, &bytes).map_err(Self::io(&path))?;
        st.files.insert(key.clone(), bytes);
        *st.submissions.entry(key).or_default() += 1;
        st.status[i] = if set.ignored { Status::Ignored } else { Status::Labeled };
        st.clock += 1;
        st.touched[i] = st.clock;
        st.latest.insert(i, set);
        Ok(())
    }

    pub fn save_labels(&self, doc_id: &str, annotator: &str, sub: LabelSubmission) -> Result<LineLabelSet, StoreError> {
        let i = self.index(doc_id)?;
        if sub.doc_id.as_deref().is_some_and(|d| d != doc_id) {
            return Err(StoreError::BadRequest(format!("body doc_id does not match task {doc_id}")));
        }
        let set = LineLabelSet {
            doc_id: doc_id.to_string(),
            labels: sub.labels,
            ignored: false,
            annotator: annotator.to_string(),
            timestamp: now_rfc3339(),
        };
        set.validate(self.docs[i].doc.len())?;
        let mut st = self.state.lock().unwrap();
        if st.status[i] == Status::Ignored {
            return Err(StoreError::Conflict {
                doc_id: doc_id.to_string(),
                status: Status::Ignored,
                action: "labeling",
            });
        }
        self.persist(&mut st, i, set.clone())?;
        Ok(set)
    }

    pub fn ignore(&self, doc_id: &str, annotator: &str) -> Result<LineLabelSet, StoreError> {
        let i = self.index(doc_id)?;
        let mut st = self.state.lock().unwrap();
        if st.status[i] != Status::Unlabeled {
            return Err(StoreError::Conflict {
                doc_id: doc_id.to_string(),
                status: st.status[i],
                action: "ignoring",
            });
        }
        let set = LineLabelSet {
            doc_id: doc_id.to_string(),
            labels: Vec::new(),
            ignored: true,
            annotator: annotator.to_string(),
            timestamp: now_rfc3339(),
        };
        self.persist(&mut st, i, set.clone())?;
        Ok(set)
    }

    pub fn stats(&self) -> StoreStats {
        let st = self.state.lock().unwrap();
        let count = |s| st.status.iter().filter(|&&x| x == s).count();
        StoreStats {
            total: self.docs.len(),
            unlabeled: count(Status::Unlabeled),
            labeled: count(Status::Labeled),
            ignored: count(Status::Ignored),
            submissions: st.submissions.clone(),
        }
    }

    /// Latest labels of every labeled task, paired with its document.
    pub fn examples(&self) -> Vec<Example> {
        let st = self.state.lock().unwrap();
        let mut out: Vec<(usize, Example)> = st
            .latest
            .iter()
            .filter(|(_, s)| !s.ignored)
            .map(|(&i, s)| {
                (
                    i,
                    Example {
                        doc: self.docs[i].doc.clone(),
                        labels: s.clone(),
                    },
                )
            })
            .collect();
        out.sort_by_key(|(i, _)| *i);
        out.into_iter().map(|(_, e)| e).collect()
    }

    /// Labeled tasks by decreasing |surprise| between the two review
    /// models; doc_id ascending on ties.
    pub fn review(&self) -> Result<Vec<ReviewEntry>, StoreError> {
        let (prev, new) = self.config.review.as_ref().ok_or(StoreError::NoModels)?;
        review_order(prev, new, &self.examples())
    }
}

pub fn review_order(prev: &ExtractorModel, new: &ExtractorModel, examples: &[Example]) -> Result<Vec<ReviewEntry>, StoreError> {
    let mut out = examples
        .iter()
        .map(|ex| {
            Ok(ReviewEntry {
                doc_id: ex.labels.doc_id.clone(),
                delta: surprise(prev, new, ex)?,
            })
        })
        .collect::<Result<Vec<_>, StoreError>>()?;
    out.sort_by(|a, b| b.delta.abs().total_cmp(&a.delta.abs()).then_with(|| a.doc_id.cmp(&b.doc_id)));
    Ok(out)
}
