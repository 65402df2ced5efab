use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use nordcrawl_core::archive::{read_wet, write_wet, LocalArchives, WarcIndex, WetRecord};
use nordcrawl_core::extractor::Scorer;
use nordcrawl_core::filters::apply_filters;
use nordcrawl_core::pipeline::*;
use nordcrawl_core::selection::{normalize_line, TrigramClassifier};
use proptest::prelude::*;

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/crawl")
}

fn config(out: &Path, workers: usize) -> PipelineConfig {
    PipelineConfig {
        snapshot: "CC-FIXTURE".into(),
        wet_dir: fixture_dir().join("wet"),
        warc: WarcSource {
            dir: Some(fixture_dir().join("warc")),
            ..Default::default()
        },
        workers,
        output_dir: out.to_path_buf(),
        resume: false,
        ..Default::default()
    }
}

fn data_files(out: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(out.join("data"))
        .map(|rd| {
            rd.map(|e| e.unwrap())
                .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
                .collect()
        })
        .unwrap_or_default()
}

#[test]
fn fixture_crawl_matches_golden_output() {
    let tmp = tempfile::tempdir().unwrap();
    run(&config(tmp.path(), 1)).unwrap();
    let got = data_files(tmp.path());
    let golden_dir = fixture_dir().join("golden");
    let mut want = BTreeMap::new();
    for e in fs::read_dir(&golden_dir).unwrap() {
        let e = e.unwrap();
        want.insert(e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap());
    }
    assert_eq!(got.keys().collect::<Vec<_>>(), want.keys().collect::<Vec<_>>());
    for (name, bytes) in &want {
        assert!(got[name] == *bytes, "{name} differs from golden:\n{}", String::from_utf8_lossy(&got[name]));
    }
}

#[test]
fn output_is_identical_across_runs_and_worker_counts() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (d, workers) in dirs.iter().zip([1, 1, 8]) {
        run(&config(d.path(), workers)).unwrap();
    }
    let first = data_files(dirs[0].path());
    assert!(!first.is_empty());
    let stats = fs::read(dirs[0].path().join(STATS)).unwrap();
    for d in &dirs[1..] {
        assert_eq!(data_files(d.path()), first);
        assert_eq!(fs::read(d.path().join(STATS)).unwrap(), stats);
    }
}

#[test]
fn records_carry_exactly_the_five_fields_in_order() {
    let tmp = tempfile::tempdir().unwrap();
    run(&config(tmp.path(), 1)).unwrap();
    let mut n = 0;
    for bytes in data_files(tmp.path()).values() {
        for line in std::str::from_utf8(bytes).unwrap().lines() {
            let keys: Vec<String> = serde_json::from_str::<serde_json::Map<String, serde_json::Value>>(line)
                .unwrap()
                .keys()
                .cloned()
                .collect();
            let mut sorted = keys.clone();
            sorted.sort();
            assert_eq!(sorted, ["language", "text", "url", "warc_date", "warc_file"]);
            // key order in the raw line
            let pos: Vec<usize> = ["\"url\"", "\"warc_file\"", "\"warc_date\"", "\"text\"", "\"language\""]
                .iter()
                .map(|k| line.find(k).unwrap())
                .collect();
            assert!(pos.windows(2).all(|w| w[0] < w[1]), "{line}");
            n += 1;
        }
    }
    assert_eq!(n, 4);
}

#[test]
fn fixture_stats_are_conserved_and_outputs_pass_filters() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), 2);
    let stats = run(&cfg).unwrap();
    stats.check_conservation().unwrap();
    assert_eq!((stats.documents_in, stats.documents_out), (10, 4));
    let removed: u64 = stats.stages.in_order().iter().map(|s| s.removed_total()).sum();
    assert_eq!(stats.documents_in, stats.documents_out + removed);
    assert_eq!(stats.stages.select.removed["language"], 1);
    assert_eq!(
        stats.stages.fetch.removed.keys().collect::<Vec<_>>(),
        ["http_status", "no_warc_record", "not_html"]
    );
    assert_eq!(stats.stages.dedup.removed["near_duplicate"], 1);
    assert_eq!(stats.pii.emails_replaced, 1);
    assert_eq!(stats.pii.ips_replaced, 1);
    assert_eq!(read_stats(tmp.path()).unwrap(), stats);

    let records = read_output(tmp.path()).unwrap();
    assert_eq!(records.len(), 4);
    for r in &records {
        let v = apply_filters(&r.url, &r.text, &cfg.filters);
        assert!(v.passed, "{}: {:?}", r.url, v.failed_filters);
        assert!(!r.text.contains('<'));
    }
    let langs: BTreeSet<&str> = records.iter().map(|r| r.language.as_str()).collect();
    assert_eq!(langs, BTreeSet::from(["da", "is", "no", "sv"]));
    let sv = records.iter().find(|r| r.language == "sv").unwrap();
    assert!(!sv.text.contains("parken@vasteras-exempel.se"));
    assert!(!sv.text.contains("81.2.69.160"));
    assert!(sv.text.contains("192.168.10.4"));
}

#[test]
fn empty_input_gives_empty_output_and_zeroed_stats() {
    let tmp = tempfile::tempdir().unwrap();
    let wet = tmp.path().join("wet");
    let warc = tmp.path().join("warc");
    fs::create_dir_all(&wet).unwrap();
    fs::create_dir_all(&warc).unwrap();
    let cfg = PipelineConfig {
        snapshot: "EMPTY".into(),
        wet_dir: wet,
        warc: WarcSource {
            dir: Some(warc),
            ..Default::default()
        },
        workers: 1,
        output_dir: tmp.path().join("out"),
        ..Default::default()
    };
    let stats = run(&cfg).unwrap();
    assert_eq!(
        stats,
        RunStats {
            snapshot: "EMPTY".into(),
            ..Default::default()
        }
    );
    stats.check_conservation().unwrap();
    assert!(read_output(&cfg.output_dir).unwrap().is_empty());
    let report = stats_report(&stats);
    assert!(report.languages.is_empty());
    assert_eq!(report.dominant_language, None);
    assert!(report.histograms.iter().all(|h| h.buckets.is_empty()));
    assert!(!report.to_string().contains("NaN"));
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for e in fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        fs::copy(e.path(), to.join(e.file_name())).unwrap();
    }
}

#[test]
fn resume_reuses_completed_shards() {
    let tmp = tempfile::tempdir().unwrap();
    let wet = tmp.path().join("wet");
    copy_dir(&fixture_dir().join("wet"), &wet);
    let out = tmp.path().join("out");
    let cfg = PipelineConfig {
        wet_dir: wet.clone(),
        resume: true,
        ..config(&out, 1)
    };
    let first = run(&cfg).unwrap();
    let manifest: Manifest = serde_json::from_slice(&fs::read(out.join(MANIFEST)).unwrap()).unwrap();
    assert_eq!(manifest.completed, ["CC-FIXTURE-00000.warc.wet.gz", "CC-FIXTURE-00001.warc.wet.gz"]);
    let before = data_files(&out);

    // shard 1 now holds no records; a resumed run must not look at it
    fs::write(wet.join("CC-FIXTURE-00001.warc.wet.gz"), write_wet(&[])).unwrap();
    fs::remove_dir_all(out.join("data")).unwrap();
    let resumed = run(&cfg).unwrap();
    assert_eq!(resumed, first);
    assert_eq!(data_files(&out), before);

    // a changed setting invalidates the manifest
    let changed = PipelineConfig { dedup_seed: 1, ..cfg.clone() };
    let fresh = run(&changed).unwrap();
    assert_eq!(fresh.documents_in, first.documents_in - 5);
    assert_eq!(fresh.documents_out, first.documents_out - 1);

    let no_resume = PipelineConfig { resume: false, ..cfg };
    assert_eq!(run(&no_resume).unwrap().documents_out, first.documents_out - 1);
}

#[test]
fn invalid_config_is_rejected_before_any_work() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        snapshot: " ".into(),
        ..config(tmp.path(), 1)
    };
    assert!(matches!(run(&cfg), Err(PipelineError::Config(_))));
    assert!(!tmp.path().join(MANIFEST).exists());
}

#[test]
fn report_names_swedish_dominant_for_published_shares() {
    let mut stats = RunStats::default();
    for (lang, n) in [("sv", 4800), ("da", 2600), ("no", 2000), ("is", 230)] {
        stats.languages.insert(lang.into(), n);
    }
    let report = stats_report(&stats);
    assert_eq!(report.dominant_language.as_deref(), Some("sv"));
    let order: Vec<&str> = report.languages.iter().map(|l| l.language.as_str()).collect();
    assert_eq!(order, ["sv", "da", "no", "is"]);
    let total: f64 = report.languages.iter().map(|l| l.share).sum();
    assert!((total - 1.0).abs() <= 1e-9);
    assert!((report.languages[0].share - 4800.0 / 9630.0).abs() < 1e-15);
    let json: StatsReport = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(json, report);
}

#[test]
fn single_document_run_has_one_bucket_histograms() {
    let tmp = tempfile::tempdir().unwrap();
    let wet = tmp.path().join("wet");
    fs::create_dir_all(&wet).unwrap();
    let records: Vec<WetRecord> = read_wet(fs::File::open(fixture_dir().join("wet/CC-FIXTURE-00001.warc.wet.gz")).unwrap())
        .filter(|r| r.target_uri.contains("snjor"))
        .collect();
    assert_eq!(records.len(), 1);
    fs::write(wet.join("ONE-00000.warc.wet.gz"), write_wet(&records)).unwrap();
    let cfg = PipelineConfig {
        wet_dir: wet,
        ..config(&tmp.path().join("out"), 1)
    };
    let stats = run(&cfg).unwrap();
    assert_eq!((stats.documents_in, stats.documents_out), (1, 1));
    let report = stats_report(&stats);
    assert_eq!(report.histograms.len(), 4);
    for h in &report.histograms {
        assert_eq!(h.buckets.len(), 1, "{}", h.filter);
        assert_eq!(h.buckets[0].count, 1);
        assert!(h.buckets[0].lo <= h.buckets[0].hi);
    }
    assert_eq!(report.languages.len(), 1);
    assert_eq!(report.languages[0].share, 1.0);
}

fn fixture_records() -> Vec<WetRecord> {
    let mut all = Vec::new();
    for name in ["CC-FIXTURE-00000.warc.wet.gz", "CC-FIXTURE-00001.warc.wet.gz"] {
        all.extend(read_wet(fs::File::open(fixture_dir().join("wet").join(name)).unwrap()));
    }
    all
}

/// Records that share a normalized line go in one group, since line dedup
/// is scoped to a shard.
fn line_groups(records: &[WetRecord]) -> Vec<usize> {
    let mut group: Vec<usize> = (0..records.len()).collect();
    fn root(g: &mut [usize], mut i: usize) -> usize {
        while g[i] != i {
            i = g[i];
        }
        i
    }
    let mut owner: BTreeMap<String, usize> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        for line in r.lines() {
            let key = normalize_line(line);
            if key.is_empty() {
                continue;
            }
            match owner.get(&key) {
                Some(&j) => {
                    let (a, b) = (root(&mut group, i), root(&mut group, j));
                    group[a.max(b)] = a.min(b);
                }
                None => {
                    owner.insert(key, i);
                }
            }
        }
    }
    (0..records.len()).map(|i| root(&mut group, i)).collect()
}

fn candidates_of(wet: &Path, shards: &[Vec<WetRecord>]) -> (BTreeSet<String>, RunStats) {
    fs::create_dir_all(wet).unwrap();
    let mut names = Vec::new();
    for (i, recs) in shards.iter().enumerate() {
        let name = format!("SPLIT-{i:05}.warc.wet.gz");
        fs::write(wet.join(&name), write_wet(recs)).unwrap();
        names.push(name);
    }
    let cfg = PipelineConfig {
        wet_dir: wet.to_path_buf(),
        ..config(wet, 1)
    };
    let index = WarcIndex::scan_dir(&fixture_dir().join("warc")).unwrap();
    let source = LocalArchives::new(fixture_dir().join("warc"));
    let scorer = Scorer::Model(bundled_model());
    let ctx = Context {
        config: &cfg,
        detector: TrigramClassifier::bundled(),
        index: &index,
        source: &source,
        scorer: &scorer,
    };
    let mut docs = BTreeSet::new();
    let mut stats = RunStats::default();
    for name in &names {
        let r = process_shard(&ctx, name).unwrap();
        stats.merge(&r.stats);
        docs.extend(r.candidates.iter().map(|d| serde_json::to_string(d).unwrap()));
    }
    (docs, stats)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shard_processing_is_associative(assign in prop::collection::vec(0usize..4, 10)) {
        let records = fixture_records();
        prop_assume!(records.len() == assign.len());
        let groups = line_groups(&records);
        let mut shards: Vec<Vec<WetRecord>> = vec![Vec::new(); 4];
        for (i, r) in records.iter().enumerate() {
            shards[assign[groups[i]]].push(r.clone());
        }
        shards.retain(|s| !s.is_empty());
        let concatenated: Vec<WetRecord> = shards.concat();

        let tmp = tempfile::tempdir().unwrap();
        let (split_docs, split_stats) = candidates_of(&tmp.path().join("split"), &shards);
        let (whole_docs, whole_stats) = candidates_of(&tmp.path().join("whole"), &[concatenated]);
        prop_assert_eq!(split_docs, whole_docs);
        prop_assert_eq!(split_stats.stages, whole_stats.stages);
        prop_assert_eq!(split_stats.documents_in, whole_stats.documents_in);
        prop_assert_eq!(split_stats.histograms, whole_stats.histograms);
    }
}
