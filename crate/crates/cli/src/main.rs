use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use nordcrawl_annotate::{serve_blocking, StoreConfig, TaskStore};
use nordcrawl_core::archive::index::sorted_files;
use nordcrawl_core::archive::{read_wet, HttpConfig, HttpSource, LocalArchives, RecordSource, WarcIndex};
use nordcrawl_core::atomic::write_atomic;
use nordcrawl_core::cloze::{self, ClozeItem, ClozeReport, LmScorer, ScoreOptions};
use nordcrawl_core::extractor::labels::{read_jsonl, write_jsonl};
use nordcrawl_core::extractor::{
    self, evaluate_at, join, split_validation, train, tune_threshold, DocumentRecord, Example, ExtractorModel,
    LineLabelSet, ScoreFile, Scorer, TrainConfig,
};
use nordcrawl_core::filters::FilterConfig;
use nordcrawl_core::pii::{scrub, PiiConfig};
use nordcrawl_core::pipeline::{
    self, bundled_model, convert_one, dedup_docs, extract_one, fetch_one, filter_one, stats_report, ConvertedDoc,
    CuratedRecord, FetchedDoc, PipelineConfig, TextDoc, WET_SUFFIX,
};
use nordcrawl_core::selection::{
    dedup_record, is_selected, read_index, score_record, write_index, ShardState, TrigramClassifier,
};

#[derive(Parser)]
#[command(name = "nordcrawl", version, about = "Scandinavian web-crawl to Markdown corpus pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Line-dedup WET archives and select Scandinavian records into an index.
    Select(SelectArgs),
    /// Read the response records of an index from WARC archives.
    Fetch(FetchArgs),
    /// Convert fetched HTML to Markdown.
    Convert(IoArgs),
    /// Keep the lines the extractor scores at or above the threshold.
    Extract(ExtractArgs),
    /// Apply the quality filters.
    Filter(FilterArgs),
    /// Remove near-duplicate documents.
    Dedup(DedupArgs),
    /// Replace email addresses and public IP addresses.
    Scrub(ScrubArgs),
    /// Run every stage from a config file.
    Run(RunArgs),
    /// Summarise the statistics of a finished run.
    Stats(StatsArgs),
    /// Train the line extractor.
    TrainExtractor(TrainArgs),
    /// Evaluate a line extractor on annotated documents.
    EvalExtractor(EvalArgs),
    /// Serve the annotation API.
    AnnotateServe(ServeArgs),
    /// Run a cloze evaluation.
    EvalCloze(ClozeArgs),
}

#[derive(Args)]
struct IoArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    wet_dir: PathBuf,
    /// Selection index (tab-separated).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = nordcrawl_core::selection::DEFAULT_THRESHOLD)]
    threshold: f64,
}

#[derive(Args)]
struct WarcArgs {
    #[arg(long, conflicts_with = "base_url")]
    warc_dir: Option<PathBuf>,
    #[arg(long, requires = "pointers")]
    base_url: Option<String>,
    /// Pointer file (uri, path, offset, length); scanned from --warc-dir when absent.
    #[arg(long)]
    pointers: Option<PathBuf>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct FetchArgs {
    /// Selection index written by `select`.
    #[arg(long)]
    index: PathBuf,
    #[command(flatten)]
    warc: WarcArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractorArgs {
    #[arg(long, conflicts_with = "scores")]
    model: Option<PathBuf>,
    /// Precomputed line scores, JSONL of {doc_id, scores}.
    #[arg(long, requires = "threshold")]
    scores: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    io: IoArgs,
    #[command(flatten)]
    extractor: ExtractorArgs,
}

#[derive(Args, Default)]
struct FilterFlags {
    #[arg(long)]
    min_length: Option<usize>,
    #[arg(long)]
    min_alnum_ratio: Option<f64>,
    #[arg(long)]
    max_heading_ratio: Option<f64>,
    #[arg(long)]
    min_entropy: Option<f64>,
}

impl FilterFlags {
    fn apply(&self, cfg: &mut FilterConfig) {
        if let Some(v) = self.min_length {
            cfg.min_length = v;
        }
        if let Some(v) = self.min_alnum_ratio {
            cfg.min_alnum_ratio = v;
        }
        if let Some(v) = self.max_heading_ratio {
            cfg.max_heading_ratio = v;
        }
        if let Some(v) = self.min_entropy {
            cfg.min_entropy = v;
        }
    }
}

#[derive(Args)]
struct FilterArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Per-document measurements and verdicts.
    #[arg(long)]
    verdicts: Option<PathBuf>,
    #[command(flatten)]
    flags: FilterFlags,
}

#[derive(Args)]
struct DedupArgs {
    #[command(flatten)]
    io: IoArgs,
    #[arg(long)]
    snapshot: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Removed document ids with the reason.
    #[arg(long)]
    removals: Option<PathBuf>,
}

#[derive(Args, Default)]
struct PiiFlags {
    /// Comma-separated substitute addresses.
    #[arg(long, value_delimiter = ',')]
    email_pool: Option<Vec<String>>,
    #[arg(long)]
    ipv6: bool,
}

impl PiiFlags {
    fn apply(&self, cfg: &mut PiiConfig) {
        if let Some(pool) = &self.email_pool {
            cfg.email_pool = pool.clone();
        }
        if self.ipv6 {
            cfg.scrub_ipv6 = true;
        }
    }
}

#[derive(Args)]
struct ScrubArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Replacement counts per document.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    pii: PiiFlags,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    snapshot: Option<String>,
    #[arg(long)]
    wet_dir: Option<PathBuf>,
    #[command(flatten)]
    warc: WarcArgs,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    language_threshold: Option<f64>,
    #[command(flatten)]
    extractor: ExtractorArgs,
    #[command(flatten)]
    filters: FilterFlags,
    #[arg(long)]
    dedup_seed: Option<u64>,
    #[command(flatten)]
    pii: PiiFlags,
    /// Recompute every shard even when the manifest lists it.
    #[arg(long)]
    no_resume: bool,
}

#[derive(Args)]
struct StatsArgs {
    /// Output directory of a run.
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DataArgs {
    /// Document file (JSONL with doc_id, url, warc_date, markdown).
    #[arg(long, requires = "labels", conflicts_with = "synthetic")]
    docs: Option<PathBuf>,
    /// Label files (JSONL of line label sets); later files win.
    #[arg(long, num_args = 1..)]
    labels: Vec<PathBuf>,
    /// Use this many generated pages instead of annotated files.
    #[arg(long)]
    synthetic: Option<usize>,
    #[arg(long, default_value_t = 42)]
    synthetic_seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Documents held out for validation.
    #[arg(long, default_value_t = 0)]
    val: usize,
    /// Store the threshold with the best training-set F1.
    #[arg(long)]
    tune: bool,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Defaults to the bundled model.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ServeArgs {
    /// Converted documents (output of `convert`).
    #[arg(long)]
    docs: PathBuf,
    /// Fetched HTML (output of `fetch`) for side-by-side display.
    #[arg(long)]
    html: Option<PathBuf>,
    #[arg(long)]
    labels_dir: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// Model whose line scores are shown with each task.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, requires = "review_new")]
    review_prev: Option<PathBuf>,
    #[arg(long, requires = "review_prev")]
    review_new: Option<PathBuf>,
    /// Static UI bundle served at `/`.
    #[arg(long)]
    ui_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScorerKind {
    ExternalCommand,
    Constant,
    Oracle,
    Random,
}

#[derive(Args)]
struct ClozeArgs {
    /// JSONL of {passage, alternatives, answer_index}.
    #[arg(long, conflicts_with = "synthetic")]
    tasks: Option<PathBuf>,
    /// Generate this many items instead.
    #[arg(long)]
    synthetic: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    scorer: ScorerKind,
    /// Shell command for the external scorer: text on stdin, one float on stdout.
    #[arg(long)]
    command: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    value: f64,
    /// Score only the filled-in spans.
    #[arg(long)]
    spans_only: bool,
    /// Divide each score by the number of whitespace tokens.
    #[arg(long)]
    length_normalize: bool,
    /// Write the items that were evaluated.
    #[arg(long)]
    write_tasks: Option<PathBuf>,
    /// Print the full per-item report as JSON.
    #[arg(long)]
    json: bool,
}

fn read_file<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_jsonl(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn write_file<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, items)?;
    write_atomic(path, &buf).with_context(|| format!("writing {}", path.display()))
}

fn warc_source(a: &WarcArgs) -> Result<(WarcIndex, Box<dyn RecordSource>)> {
    let index = match (&a.pointers, &a.warc_dir) {
        (Some(p), _) => WarcIndex::read_pointer_file(p)?,
        (None, Some(dir)) => WarcIndex::scan_dir(dir)?,
        (None, None) => bail!("one of --warc-dir or --base-url with --pointers is required"),
    };
    let source: Box<dyn RecordSource> = match (&a.warc_dir, &a.base_url) {
        (Some(dir), _) => Box::new(LocalArchives::new(dir)),
        (None, Some(url)) => {
            let mut cfg = HttpConfig::new(url);
            cfg.cache_dir = a.cache_dir.clone();
            Box::new(HttpSource::new(cfg))
        }
        (None, None) => bail!("one of --warc-dir or --base-url is required"),
    };
    Ok((index, source))
}

fn load_model(path: Option<&Path>) -> Result<ExtractorModel> {
    let m = match path {
        Some(p) => ExtractorModel::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => bundled_model(),
    };
    m.check()?;
    Ok(m)
}

fn scorer(a: &ExtractorArgs) -> Result<Scorer> {
    if let Some(path) = &a.scores {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let scores = ScoreFile::read(BufReader::new(f))?;
        return Ok(Scorer::External {
            scores,
            threshold: a.threshold.expect("clap requires threshold"),
        });
    }
    let mut m = load_model(a.model.as_deref())?;
    if let Some(t) = a.threshold {
        m.threshold = t;
    }
    Ok(Scorer::Model(m))
}

fn cmd_select(a: SelectArgs) -> Result<()> {
    let detector = TrigramClassifier::bundled();
    let mut out = Vec::new();
    let (mut seen, mut kept) = (0usize, 0usize);
    for name in sorted_files(&a.wet_dir, WET_SUFFIX)? {
        let path = a.wet_dir.join(&name);
        let f = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
        let mut state = ShardState::new();
        for record in read_wet(f) {
            seen += 1;
            let Some(record) = dedup_record(record, &mut state) else { continue };
            let sel = score_record(&record, &name, detector);
            if is_selected(sel.best_score, a.threshold) {
                kept += 1;
                out.push(sel);
            }
        }
    }
    let mut buf = Vec::new();
    write_index(&mut buf, &out)?;
    write_atomic(&a.out, &buf)?;
    eprintln!("selected {kept} of {seen} records");
    Ok(())
}

fn cmd_fetch(a: FetchArgs) -> Result<()> {
    let f = File::open(&a.index).with_context(|| format!("opening {}", a.index.display()))?;
    let selected = read_index(BufReader::new(f))?;
    let (index, source) = warc_source(&a.warc)?;
    let mut docs = Vec::new();
    let mut skipped: HashMap<&str, usize> = HashMap::new();
    for sel in &selected {
        match fetch_one(&index, source.as_ref(), sel)? {
            Ok(d) => docs.push(d),
            Err(reason) => *skipped.entry(reason).or_default() += 1,
        }
    }
    write_file(&a.out, &docs)?;
    eprintln!("fetched {} of {} documents; skipped {skipped:?}", docs.len(), selected.len());
    Ok(())
}

fn cmd_convert(a: IoArgs) -> Result<()> {
    let docs: Vec<FetchedDoc> = read_file(&a.input)?;
    let out: Vec<ConvertedDoc> = docs.iter().map(convert_one).collect();
    write_file(&a.out, &out)
}

fn cmd_extract(a: ExtractArgs) -> Result<()> {
    let scorer = scorer(&a.extractor)?;
    let docs: Vec<ConvertedDoc> = read_file(&a.io.input)?;
    let out = docs.iter().map(|d| extract_one(&scorer, d)).collect::<Result<Vec<_>, _>>()?;
    write_file(&a.io.out, &out)
}

fn cmd_filter(a: FilterArgs) -> Result<()> {
    let mut cfg = FilterConfig::default();
    a.flags.apply(&mut cfg);
    let docs: Vec<TextDoc> = read_file(&a.io.input)?;
    let verdicts: Vec<_> = docs.iter().map(|d| filter_one(d, &cfg)).collect();
    let passed: Vec<&TextDoc> = docs.iter().zip(&verdicts).filter(|(_, v)| v.passed).map(|(d, _)| d).collect();
    write_file(&a.io.out, &passed)?;
    if let Some(p) = &a.verdicts {
        write_file(p, &verdicts)?;
    }
    eprintln!("{} of {} documents passed", passed.len(), docs.len());
    Ok(())
}

fn cmd_dedup(a: DedupArgs) -> Result<()> {
    let docs: Vec<TextDoc> = read_file(&a.io.input)?;
    let n = docs.len();
    let out = dedup_docs(docs, &a.snapshot, a.seed);
    write_file(&a.io.out, &out.kept)?;
    if let Some(p) = &a.removals {
        let rows: Vec<_> = out
            .removed
            .iter()
            .map(|(id, why)| serde_json::json!({"doc_id": id, "reason": why}))
            .collect();
        write_file(p, &rows)?;
    }
    eprintln!("kept {} of {n} documents", out.kept.len());
    Ok(())
}

fn cmd_scrub(a: ScrubArgs) -> Result<()> {
    let mut cfg = PiiConfig::default();
    a.pii.apply(&mut cfg);
    let docs: Vec<TextDoc> = read_file(&a.io.input)?;
    let mut reports = Vec::new();
    let out: Vec<CuratedRecord> = docs
        .into_iter()
        .map(|mut d| {
            let (text, report) = scrub(&d.meta.doc_id, &d.text, &cfg);
            reports.push(report);
            d.text = text;
            d.into()
        })
        .collect();
    write_file(&a.io.out, &out)?;
    if let Some(p) = &a.report {
        write_file(p, &reports)?;
    }
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = a.snapshot {
        cfg.snapshot = v;
    }
    if let Some(v) = a.wet_dir {
        cfg.wet_dir = v;
    }
    if a.warc.warc_dir.is_some() || a.warc.base_url.is_some() {
        cfg.warc.dir = a.warc.warc_dir;
        cfg.warc.base_url = a.warc.base_url;
    }
    if a.warc.pointers.is_some() {
        cfg.warc.pointers = a.warc.pointers;
    }
    if a.warc.cache_dir.is_some() {
        cfg.warc.cache_dir = a.warc.cache_dir;
    }
    if let Some(v) = a.output_dir {
        cfg.output_dir = v;
    }
    if let Some(v) = a.workers {
        cfg.workers = v;
    }
    if let Some(v) = a.language_threshold {
        cfg.language_threshold = v;
    }
    if a.extractor.model.is_some() {
        cfg.extractor.model = a.extractor.model;
        cfg.extractor.scores = None;
    }
    if a.extractor.scores.is_some() {
        cfg.extractor.scores = a.extractor.scores;
        cfg.extractor.model = None;
    }
    if a.extractor.threshold.is_some() {
        cfg.extractor.threshold = a.extractor.threshold;
    }
    a.filters.apply(&mut cfg.filters);
    if let Some(v) = a.dedup_seed {
        cfg.dedup_seed = v;
    }
    a.pii.apply(&mut cfg.pii);
    if a.no_resume {
        cfg.resume = false;
    }
    let stats = pipeline::run(&cfg)?;
    if let Err(e) = stats.check_conservation() {
        bail!("run statistics are inconsistent: {e}");
    }
    print!("{}", stats_report(&stats));
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> Result<()> {
    let report = stats_report(&pipeline::read_stats(&a.output_dir)?);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{report}");
    }
    Ok(())
}

fn examples(d: &DataArgs) -> Result<Vec<Example>> {
    if let Some(n) = d.synthetic {
        return Ok(extractor::synthetic::examples(n, d.synthetic_seed));
    }
    let Some(docs) = &d.docs else { bail!("one of --docs or --synthetic is required") };
    let docs: Vec<DocumentRecord> = read_file(docs)?;
    let mut labels: Vec<LineLabelSet> = Vec::new();
    for p in &d.labels {
        labels.extend(read_file::<LineLabelSet>(p)?);
    }
    Ok(join(&docs, &labels)?)
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let all = examples(&a.data)?;
    let (train_set, val) = if a.val > 0 { split_validation(all, a.val) } else { (all, Vec::new()) };
    let mut cfg = TrainConfig::default();
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = a.l2 {
        cfg.l2 = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.threshold {
        cfg.threshold = v;
    }
    let mut model = train(&train_set, &cfg)?;
    if a.tune {
        model.threshold = tune_threshold(&model, &train_set)?;
    }
    model.save(&a.out)?;
    eprintln!(
        "trained on {} documents ({} lines), loss {:.5}, threshold {:.6}",
        train_set.len(),
        model.metadata.training_lines,
        model.metadata.final_loss,
        model.threshold
    );
    for w in &model.metadata.warnings {
        eprintln!("warning: {w}");
    }
    if !val.is_empty() {
        let e = evaluate_at(&model, &val, model.threshold)?;
        eprintln!(
            "validation on {} documents: precision {:.4} recall {:.4} F1 {:.4}",
            val.len(),
            e.precision,
            e.recall,
            e.f1
        );
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let model = load_model(a.model.as_deref())?;
    let data = examples(&a.data)?;
    let e = evaluate_at(&model, &data, a.threshold.unwrap_or(model.threshold))?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&e)?);
        return Ok(());
    }
    println!("threshold {:.6}", e.threshold);
    println!("precision {:.4}", e.precision);
    println!("recall    {:.4}", e.recall);
    println!("F1        {:.4}", e.f1);
    if let Some((t, f1)) = e.curve.best_threshold() {
        println!("best F1 {f1:.4} at threshold {t:.6}");
    }
    Ok(())
}

fn cmd_serve(a: ServeArgs) -> Result<()> {
    let docs: Vec<DocumentRecord> = read_file(&a.docs)?;
    let html = match &a.html {
        Some(p) => read_file::<FetchedDoc>(p)?
            .into_iter()
            .map(|d| (d.meta.doc_id, d.html))
            .collect(),
        None => HashMap::new(),
    };
    let review = match (&a.review_prev, &a.review_new) {
        (Some(p), Some(n)) => Some((load_model(Some(p))?, load_model(Some(n))?)),
        _ => None,
    };
    let config = StoreConfig {
        labels_dir: a.labels_dir,
        model: a.model.as_deref().map(|p| load_model(Some(p))).transpose()?,
        review,
    };
    let store = TaskStore::new(docs, html, config)?;
    serve_blocking(store, a.bind, a.ui_dir)?;
    Ok(())
}

fn cmd_cloze(a: ClozeArgs) -> Result<()> {
    let items: Vec<ClozeItem> = match (&a.tasks, a.synthetic) {
        (Some(p), _) => read_file(p)?,
        (None, Some(n)) => cloze::synthetic_items(n, a.seed),
        (None, None) => bail!("one of --tasks or --synthetic is required"),
    };
    if items.is_empty() {
        bail!("no cloze items");
    }
    if let Some(p) = &a.write_tasks {
        write_file(p, &items)?;
    }
    let opts = ScoreOptions {
        spans_only: a.spans_only,
        length_normalize: a.length_normalize,
    };
    let scorer: Box<dyn LmScorer> = match a.scorer {
        ScorerKind::Constant => Box::new(cloze::ConstantScorer(a.value)),
        ScorerKind::Oracle => Box::new(cloze::OracleScorer::new(&items, &opts)),
        ScorerKind::Random => Box::new(cloze::RandomScorer(a.seed)),
        ScorerKind::ExternalCommand => {
            let Some(command) = a.command.clone() else { bail!("--command is required for external-command") };
            Box::new(cloze::CommandScorer { command })
        }
    };
    let report: ClozeReport = cloze::evaluate(&items, scorer.as_ref(), &opts);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!(
            "accuracy {:.4} over {} items ({} errored)",
            report.accuracy, report.scored, report.errored
        );
    }
    Ok(())
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Select(a) => cmd_select(a),
        Command::Fetch(a) => cmd_fetch(a),
        Command::Convert(a) => cmd_convert(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Filter(a) => cmd_filter(a),
        Command::Dedup(a) => cmd_dedup(a),
        Command::Scrub(a) => cmd_scrub(a),
        Command::Run(a) => cmd_run(a),
        Command::Stats(a) => cmd_stats(a),
        Command::TrainExtractor(a) => cmd_train(a),
        Command::EvalExtractor(a) => cmd_eval(a),
        Command::AnnotateServe(a) => cmd_serve(a),
        Command::EvalCloze(a) => cmd_cloze(a),
    };
    std::io::stdout().flush().ok();
    result
}
