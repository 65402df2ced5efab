//! Stage wiring: select, fetch, convert, extract, filter, dedup, scrub.

mod config;
mod stats;

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{ConfigError, ExtractorSettings, PipelineConfig, WarcSource};
pub use stats::{
    stats_report, Bucket, FilterHistograms, Histogram, LanguageShare, Measure, RunStats, StageStats, Stages,
    StatsReport,
};

use crate::archive::index::sorted_files;
use crate::archive::{
    archive_stem, read_wet, ArchiveError, FetchOutcome, HttpConfig, HttpSource, LocalArchives, RecordSource,
    SkipReason, WarcIndex,
};
use crate::atomic::write_atomic;
use crate::dedup::{band_dedup, DocRef, HashFamily};
use crate::extractor::labels::{read_jsonl, write_jsonl, JsonlError};
use crate::extractor::{ExtractorModel, ModelError, ScoreFile, Scorer};
use crate::filters::{apply_filters, FilterConfig, FilterVerdict};
use crate::html2md::{html_to_markdown, MarkdownDocument};
use crate::pii::{scrub_with, PiiConfig, PiiCounts};
use crate::selection::{dedup_record, score_record, Language, LanguageDetector, SelectionRecord, ShardState};

pub const WET_SUFFIX: &str = ".wet.gz";
pub const MANIFEST: &str = "manifest.json";
pub const STATS: &str = "stats.json";

const BUNDLED_MODEL: &str = include_str!("../../data/extractor.json");

/// The extractor model shipped with the crate.
pub fn bundled_model() -> ExtractorModel {
    serde_json::from_str(BUNDLED_MODEL).expect("bundled model is valid JSON")
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{stage} failed on {doc}: {message}")]
    Stage {
        stage: &'static str,
        doc: String,
        message: String,
    },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Jsonl { path: String, source: JsonlError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Archive(#[from] ArchiveError),
    #[error("worker pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Identity and provenance carried by a document through the stages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocMeta {
    pub doc_id: String,
    pub url: String,
    pub warc_file: String,
    pub record_offset: u64,
    pub warc_date: String,
    pub language: Language,
}

impl DocMeta {
    pub fn doc_ref(&self, snapshot: &str) -> DocRef {
        DocRef {
            snapshot: snapshot.to_string(),
            warc_path: self.warc_file.clone(),
            record_offset: self.record_offset,
        }
    }
}

pub fn doc_id(warc_file: &str, record_offset: u64) -> String {
    format!("{warc_file}@{record_offset}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchedDoc {
    #[serde(flatten)]
    pub meta: DocMeta,
    pub html: String,
}

/// Readable as an [`crate::extractor::DocumentRecord`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvertedDoc {
    #[serde(flatten)]
    pub meta: DocMeta,
    pub markdown: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextDoc {
    #[serde(flatten)]
    pub meta: DocMeta,
    pub text: String,
}

/// One line of the curated output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CuratedRecord {
    pub url: String,
    pub warc_file: String,
    pub warc_date: String,
    pub text: String,
    pub language: String,
}

impl From<TextDoc> for CuratedRecord {
    fn from(d: TextDoc) -> Self {
        Self {
            url: d.meta.url,
            warc_file: d.meta.warc_file,
            warc_date: d.meta.warc_date,
            text: d.text,
            language: d.meta.language.code().to_string(),
        }
    }
}

/// Looks up and reads the response record behind a selected WET record.
/// `Ok(Err(reason))` is a soft skip.
pub fn fetch_one(
    index: &WarcIndex,
    source: &dyn RecordSource,
    sel: &SelectionRecord,
) -> Result<Result<FetchedDoc, &'static str>, PipelineError> {
    let Some(pointer) = index.lookup(&sel.target_uri, archive_stem(&sel.warc_path)) else {
        return Ok(Err("no_warc_record"));
    };
    let outcome = source.fetch_document(pointer).map_err(|e| PipelineError::Stage {
        stage: "fetch",
        doc: pointer.to_string(),
        message: e.to_string(),
    })?;
    Ok(match outcome {
        FetchOutcome::Document(d) => Ok(FetchedDoc {
            meta: DocMeta {
                doc_id: doc_id(&pointer.warc_path, pointer.record_offset),
                url: d.url,
                warc_file: pointer.warc_path.clone(),
                record_offset: pointer.record_offset,
                warc_date: d.warc_date,
                language: sel.best_language,
            },
            html: d.html,
        }),
        FetchOutcome::Skipped(SkipReason::NotHtml(_)) => Err("not_html"),
        FetchOutcome::Skipped(SkipReason::NotResponse(_)) => Err("not_response"),
        FetchOutcome::Skipped(SkipReason::HttpStatus(_)) => Err("http_status"),
    })
}

pub fn convert_one(doc: &FetchedDoc) -> ConvertedDoc {
    let md = html_to_markdown(&doc.html, &doc.meta.url, &doc.meta.warc_date);
    ConvertedDoc {
        meta: doc.meta.clone(),
        markdown: md.to_text(),
    }
}

pub fn extract_one(scorer: &Scorer, doc: &ConvertedDoc) -> Result<TextDoc, PipelineError> {
    let md = MarkdownDocument::from_text(&doc.meta.url, &doc.meta.warc_date, &doc.markdown);
    let text = scorer
        .extract(&doc.meta.doc_id, &md)
        .map_err(|e| PipelineError::Stage {
            stage: "extract",
            doc: doc.meta.doc_id.clone(),
            message: e.to_string(),
        })?;
    Ok(TextDoc {
        meta: doc.meta.clone(),
        text,
    })
}

pub fn filter_one(doc: &TextDoc, cfg: &FilterConfig) -> FilterVerdict {
    apply_filters(&doc.meta.doc_id, &doc.text, cfg)
}

/// Returns the scrubbed document, or `None` when scrubbing made it fail a
/// filter it had passed.
pub fn scrub_one(doc: &TextDoc, pii: &PiiConfig, filters: &FilterConfig) -> (Option<TextDoc>, PiiCounts) {
    let (text, counts) = scrub_with(&doc.text, pii);
    if (counts.emails_replaced > 0 || counts.ips_replaced > 0) && !apply_filters(&doc.meta.doc_id, &text, filters).passed {
        return (None, counts);
    }
    (
        Some(TextDoc {
            meta: doc.meta.clone(),
            text,
        }),
        counts,
    )
}

/// Output of near-duplicate removal.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DedupOutcome {
    /// Survivors in input order.
    pub kept: Vec<TextDoc>,
    /// Removal reason per removed document id.
    pub removed: Vec<(String, &'static str)>,
}

/// Drops repeated records, then near-duplicates by MinHash banding.
pub fn dedup_docs(docs: Vec<TextDoc>, snapshot: &str, seed: u64) -> DedupOutcome {
    let mut seen = HashSet::new();
    let mut removed = Vec::new();
    let mut unique = Vec::with_capacity(docs.len());
    for d in docs {
        if seen.insert(d.meta.doc_ref(snapshot)) {
            unique.push(d);
        } else {
            removed.push((d.meta.doc_id.clone(), "repeated_record"));
        }
    }
    let family = HashFamily::new(seed);
    let sigs: Vec<_> = unique
        .par_iter()
        .map(|d| family.signature(d.meta.doc_ref(snapshot), &d.text))
        .collect();
    let result = band_dedup(&sigs);
    let gone: HashSet<&DocRef> = result.removals.iter().map(|r| &r.removed).collect();
    let mut kept = Vec::with_capacity(unique.len());
    for d in unique {
        if gone.contains(&d.meta.doc_ref(snapshot)) {
            removed.push((d.meta.doc_id.clone(), "near_duplicate"));
        } else {
            kept.push(d);
        }
    }
    DedupOutcome { kept, removed }
}

/// Everything a shard worker needs.
pub struct Context<'a> {
    pub config: &'a PipelineConfig,
    pub detector: &'a dyn LanguageDetector,
    pub index: &'a WarcIndex,
    pub source: &'a dyn RecordSource,
    pub scorer: &'a Scorer,
}

/// What became of one selected document in the per-document stages.
#[derive(Debug, Clone, PartialEq)]
pub enum Fate {
    Removed { stage: &'static str, reason: String },
    Passed(TextDoc),
}

/// Runs fetch, convert, extract and filter on one selected record.
pub fn process_selected(ctx: &Context, sel: &SelectionRecord) -> Result<(Fate, Option<FilterVerdict>), PipelineError> {
    let fetched = match fetch_one(ctx.index, ctx.source, sel)? {
        Ok(d) => d,
        Err(reason) => {
            return Ok((
                Fate::Removed {
                    stage: "fetch",
                    reason: reason.to_string(),
                },
                None,
            ))
        }
    };
    let converted = convert_one(&fetched);
    let extracted = extract_one(ctx.scorer, &converted)?;
    let verdict = filter_one(&extracted, &ctx.config.filters);
    let fate = if verdict.passed {
        Fate::Passed(extracted)
    } else {
        Fate::Removed {
            stage: "filter",
            reason: verdict.failed_filters.join("+"),
        }
    };
    Ok((fate, Some(verdict)))
}

/// Pre-dedup result of one WET archive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardResult {
    pub shard: String,
    pub stats: RunStats,
    pub candidates: Vec<TextDoc>,
}

pub fn process_shard(ctx: &Context, shard: &str) -> Result<ShardResult, PipelineError> {
    let path = ctx.config.wet_dir.join(shard);
    let file = File::open(&path).map_err(io_err(&path))?;
    let mut reader = read_wet(file);
    let mut stats = RunStats {
        shards: 1,
        ..Default::default()
    };
    let mut state = ShardState::new();
    let mut candidates = Vec::new();
    for record in reader.by_ref() {
        stats.documents_in += 1;
        let st = &mut stats.stages;
        st.select.input += 1;
        let Some(record) = dedup_record(record, &mut state) else {
            st.select.remove("line_dedup");
            continue;
        };
        let sel = score_record(&record, shard, ctx.detector);
        if !crate::selection::is_selected(sel.best_score, ctx.config.language_threshold) {
            st.select.remove("language");
            continue;
        }
        st.select.output += 1;
        st.fetch.input += 1;
        let (fate, verdict) = process_selected(ctx, &sel)?;
        if let Some(v) = &verdict {
            stats.histograms.add(v);
            for f in &v.failed_filters {
                *stats.filter_failures.entry(f.clone()).or_default() += 1;
            }
        }
        let st = &mut stats.stages;
        match fate {
            Fate::Removed { stage: "fetch", reason } => st.fetch.remove(&reason),
            Fate::Removed { reason, .. } => {
                pass(&mut [&mut st.fetch, &mut st.convert, &mut st.extract]);
                st.filter.input += 1;
                st.filter.remove(&reason);
            }
            Fate::Passed(doc) => {
                pass(&mut [&mut st.fetch, &mut st.convert, &mut st.extract, &mut st.filter]);
                candidates.push(doc);
            }
        }
    }
    stats.archive = *reader.tally();
    Ok(ShardResult {
        shard: shard.to_string(),
        stats,
        candidates,
    })
}

/// Marks one document as passing through consecutive stages. The first
/// stage's input has already been counted.
fn pass(stages: &mut [&mut StageStats]) {
    for s in stages.iter_mut() {
        s.output += 1;
    }
    for s in stages.iter_mut().skip(1) {
        s.input += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Manifest {
    /// Fingerprint of the settings that shape shard results.
    pub fingerprint: String,
    /// Shards whose pre-dedup results are saved under `work/`.
    pub completed: Vec<String>,
}

fn fingerprint(cfg: &PipelineConfig, scorer_bytes: &[u8]) -> String {
    let mut c = cfg.clone();
    c.workers = 0;
    c.resume = false;
    c.output_dir = PathBuf::new();
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&c).expect("config serializes"));
    h.update(scorer_bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn shard_output_name(shard: &str) -> String {
    format!("{}.jsonl", archive_stem(shard))
}

fn build_scorer(cfg: &ExtractorSettings) -> Result<(Scorer, Vec<u8>), PipelineError> {
    if let Some(path) = &cfg.scores {
        let bytes = std::fs::read(path).map_err(io_err(path))?;
        let scores = ScoreFile::read(&bytes[..])?;
        let threshold = cfg.threshold.expect("validated");
        return Ok((Scorer::External { scores, threshold }, bytes));
    }
    let (mut model, bytes) = match &cfg.model {
        Some(path) => (ExtractorModel::load(path)?, std::fs::read(path).map_err(io_err(path))?),
        None => (bundled_model(), BUNDLED_MODEL.as_bytes().to_vec()),
    };
    model.check()?;
    if let Some(t) = cfg.threshold {
        model.threshold = t;
    }
    Ok((Scorer::Model(model), bytes))
}

fn build_source(cfg: &WarcSource) -> Result<(WarcIndex, Box<dyn RecordSource>), PipelineError> {
    let index = match (&cfg.pointers, &cfg.dir) {
        (Some(p), _) => WarcIndex::read_pointer_file(p)?,
        (None, Some(dir)) => WarcIndex::scan_dir(dir)?,
        (None, None) => WarcIndex::default(),
    };
    let source: Box<dyn RecordSource> = match (&cfg.dir, &cfg.base_url) {
        (Some(dir), _) => Box::new(LocalArchives::new(dir)),
        (None, Some(url)) => {
            let mut http = HttpConfig::new(url);
            http.cache_dir = cfg.cache_dir.clone();
            Box::new(HttpSource::new(http))
        }
        (None, None) => return Err(ConfigError::Invalid("no WARC source".into()).into()),
    };
    Ok((index, source))
}

fn read_manifest(path: &Path) -> Option<Manifest> {
    let bytes = std::fs::read(path).ok()?;
    serde_json::from_slice(&bytes).ok()
}

fn work_path(out: &Path, shard: &str) -> PathBuf {
    out.join("work").join(format!("{}.json", archive_stem(shard)))
}

fn load_work(out: &Path, shard: &str) -> Option<ShardResult> {
    let bytes = std::fs::read(work_path(out, shard)).ok()?;
    serde_json::from_slice::<ShardResult>(&bytes).ok().filter(|r| r.shard == shard)
}

pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))
}

/// Runs every stage and writes `data/<archive>.jsonl`, `stats.json` and
/// `manifest.json` under the output directory.
pub fn run(cfg: &PipelineConfig) -> Result<RunStats, PipelineError> {
    cfg.validate()?;
    let (scorer, scorer_bytes) = build_scorer(&cfg.extractor)?;
    let (index, source) = build_source(&cfg.warc)?;
    let shards = sorted_files(&cfg.wet_dir, WET_SUFFIX)?;
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(io_err(out))?;

    let fp = fingerprint(cfg, &scorer_bytes);
    let manifest_path = out.join(MANIFEST);
    let previous = if cfg.resume {
        read_manifest(&manifest_path).filter(|m| m.fingerprint == fp)
    } else {
        None
    };
    let done: HashSet<String> = previous.map(|m| m.completed.into_iter().collect()).unwrap_or_default();
    let manifest = Mutex::new(Manifest {
        fingerprint: fp,
        completed: shards.iter().filter(|s| done.contains(*s)).cloned().collect(),
    });
    let manifest_bytes = |m: &Manifest| serde_json::to_vec_pretty(m).expect("manifest serializes");
    write_atomic(&manifest_path, &manifest_bytes(&manifest.lock().unwrap())).map_err(io_err(&manifest_path))?;

    let ctx = Context {
        config: cfg,
        detector: crate::selection::TrigramClassifier::bundled(),
        index: &index,
        source: source.as_ref(),
        scorer: &scorer,
    };
    let pool = thread_pool(cfg.workers)?;
    let results: Vec<ShardResult> = pool.install(|| {
        shards
            .par_iter()
            .map(|shard| {
                if done.contains(shard) {
                    if let Some(r) = load_work(out, shard) {
                        tracing::info!(%shard, "reusing shard result");
                        return Ok(r);
                    }
                }
                let r = process_shard(&ctx, shard)?;
                let wp = work_path(out, shard);
                write_atomic(&wp, &serde_json::to_vec(&r).expect("shard result serializes")).map_err(io_err(&wp))?;
                let mut m = manifest.lock().unwrap();
                if !m.completed.contains(shard) {
                    m.completed.push(shard.clone());
                    m.completed.sort();
                }
                write_atomic(&manifest_path, &manifest_bytes(&m)).map_err(io_err(&manifest_path))?;
                tracing::info!(%shard, candidates = r.candidates.len(), "shard done");
                Ok(r)
            })
            .collect::<Result<_, PipelineError>>()
    })?;

    let mut stats = RunStats {
        snapshot: cfg.snapshot.clone(),
        ..Default::default()
    };
    let mut candidates = Vec::new();
    let mut shard_of: BTreeMap<String, usize> = BTreeMap::new();
    for (i, r) in results.into_iter().enumerate() {
        stats.merge(&r.stats);
        for d in r.candidates {
            shard_of.entry(d.meta.doc_id.clone()).or_insert(i);
            candidates.push(d);
        }
    }

    stats.stages.dedup.input = candidates.len() as u64;
    let deduped = pool.install(|| dedup_docs(candidates, &cfg.snapshot, cfg.dedup_seed));
    for (_, reason) in &deduped.removed {
        stats.stages.dedup.remove(reason);
    }
    stats.dedup_removed = deduped.removed.len() as u64;
    stats.stages.dedup.output = deduped.kept.len() as u64;
    stats.stages.scrub.input = deduped.kept.len() as u64;

    let scrubbed: Vec<(Option<TextDoc>, PiiCounts)> = pool.install(|| {
        deduped
            .kept
            .par_iter()
            .map(|d| scrub_one(d, &cfg.pii, &cfg.filters))
            .collect()
    });
    let mut per_shard: Vec<Vec<CuratedRecord>> = vec![Vec::new(); shards.len()];
    for (doc, counts) in scrubbed {
        stats.pii.emails_replaced += counts.emails_replaced;
        stats.pii.ips_replaced += counts.ips_replaced;
        let Some(doc) = doc else {
            stats.stages.scrub.remove("filter_recheck");
            continue;
        };
        stats.stages.scrub.output += 1;
        stats.documents_out += 1;
        let lang = doc.meta.language.code().to_string();
        let tokens = doc.text.split_whitespace().count() as u64;
        stats.tokens += tokens;
        *stats.tokens_by_language.entry(lang.clone()).or_default() += tokens;
        *stats.languages.entry(lang).or_default() += 1;
        per_shard[shard_of[&doc.meta.doc_id]].push(doc.into());
    }

    let data = out.join("data");
    std::fs::create_dir_all(&data).map_err(io_err(&data))?;
    for (shard, records) in shards.iter().zip(&per_shard) {
        let path = data.join(shard_output_name(shard));
        let mut buf = Vec::new();
        write_jsonl(&mut buf, records).map_err(io_err(&path))?;
        write_atomic(&path, &buf).map_err(io_err(&path))?;
    }
    let stats_path = out.join(STATS);
    write_atomic(&stats_path, &serde_json::to_vec_pretty(&stats).expect("stats serialize")).map_err(io_err(&stats_path))?;
    debug_assert_eq!(stats.check_conservation(), Ok(()));
    Ok(stats)
}

/// Reads every `*.jsonl` output shard of a run, in shard order.
pub fn read_output(out: &Path) -> Result<Vec<CuratedRecord>, PipelineError> {
    let data = out.join("data");
    let mut records = Vec::new();
    for name in sorted_files(&data, ".jsonl")? {
        let path = data.join(name);
        let file = File::open(&path).map_err(io_err(&path))?;
        records.extend(read_jsonl(BufReader::new(file)).map_err(|source| PipelineError::Jsonl {
            path: path.display().to_string(),
            source,
        })?);
    }
    Ok(records)
}

pub fn read_stats(out: &Path) -> Result<RunStats, PipelineError> {
    let path = out.join(STATS);
    let bytes = std::fs::read(&path).map_err(io_err(&path))?;
    serde_json::from_slice(&bytes).map_err(|e| PipelineError::Io {
        path: path.display().to_string(),
        source: e.into(),
    })
}
