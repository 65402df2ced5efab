use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn crawl() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/crawl")
}

fn nordcrawl(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_nordcrawl"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "nordcrawl {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn sorted_lines(bytes: &[u8]) -> Vec<String> {
    let mut v: Vec<String> = String::from_utf8(bytes.to_vec()).unwrap().lines().map(String::from).collect();
    v.sort();
    v
}

#[test]
fn staged_commands_agree_with_run() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let (wet, warc) = (crawl().join("wet"), crawl().join("warc"));
    let out = t.join("out");
    let report = nordcrawl(&[
        "run",
        "--snapshot",
        "CC-FIXTURE",
        "--wet-dir",
        p(&wet),
        "--warc-dir",
        p(&warc),
        "--output-dir",
        p(&out),
        "--workers",
        "2",
        "--no-resume",
    ]);
    assert!(String::from_utf8_lossy(&report.stdout).contains("documents: 10 in, 4 out"));

    nordcrawl(&["select", "--wet-dir", p(&wet), "--out", p(&t.join("sel.tsv"))]);
    nordcrawl(&["fetch", "--index", p(&t.join("sel.tsv")), "--warc-dir", p(&warc), "--out", p(&t.join("f.jsonl"))]);
    nordcrawl(&["convert", "--input", p(&t.join("f.jsonl")), "--out", p(&t.join("c.jsonl"))]);
    nordcrawl(&["extract", "--input", p(&t.join("c.jsonl")), "--out", p(&t.join("e.jsonl"))]);
    nordcrawl(&["filter", "--input", p(&t.join("e.jsonl")), "--out", p(&t.join("k.jsonl"))]);
    nordcrawl(&[
        "dedup",
        "--input",
        p(&t.join("k.jsonl")),
        "--out",
        p(&t.join("d.jsonl")),
        "--snapshot",
        "CC-FIXTURE",
        "--removals",
        p(&t.join("removed.jsonl")),
    ]);
    nordcrawl(&["scrub", "--input", p(&t.join("d.jsonl")), "--out", p(&t.join("s.jsonl"))]);

    let mut from_run = Vec::new();
    for name in ["CC-FIXTURE-00000.jsonl", "CC-FIXTURE-00001.jsonl"] {
        from_run.extend(std::fs::read(out.join("data").join(name)).unwrap());
    }
    let staged = std::fs::read(t.join("s.jsonl")).unwrap();
    assert_eq!(sorted_lines(&staged), sorted_lines(&from_run));
    let removed = std::fs::read_to_string(t.join("removed.jsonl")).unwrap();
    assert!(removed.contains("near_duplicate"), "{removed}");

    let json = nordcrawl(&["stats", "--output-dir", p(&out), "--json"]);
    let report: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(report["documents_out"], 4);
    let shares: f64 = report["languages"].as_array().unwrap().iter().map(|l| l["share"].as_f64().unwrap()).sum();
    assert!((shares - 1.0).abs() <= 1e-9);
}

#[test]
fn config_file_and_flags_combine() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "snapshot = \"CC-FIXTURE\"\nwet_dir = {:?}\nworkers = 1\n\n[warc]\ndir = {:?}\n\n[filters]\nmin_length = 100000\n",
            p(&crawl().join("wet")),
            p(&crawl().join("warc")),
        ),
    )
    .unwrap();
    let out = tmp.path().join("out");
    let strict = nordcrawl(&["run", "--config", p(&cfg), "--output-dir", p(&out), "--no-resume"]);
    assert!(String::from_utf8_lossy(&strict.stdout).contains("10 in, 0 out"));
    let relaxed = nordcrawl(&["run", "--config", p(&cfg), "--output-dir", p(&out), "--min-length", "100"]);
    assert!(String::from_utf8_lossy(&relaxed.stdout).contains("10 in, 4 out"));

    std::fs::write(&cfg, "snapshot = \"x\"\nunknown_key = 1\n").unwrap();
    let bad = Command::new(env!("CARGO_BIN_EXE_nordcrawl"))
        .args(["run", "--config", p(&cfg)])
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown_key"));
}

#[test]
fn cloze_command_reports_accuracy() {
    let tmp = tempfile::tempdir().unwrap();
    let tasks = tmp.path().join("tasks.jsonl");
    let out = nordcrawl(&[
        "eval-cloze",
        "--synthetic",
        "40",
        "--seed",
        "3",
        "--scorer",
        "oracle",
        "--write-tasks",
        p(&tasks),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("accuracy 1.0000 over 40 items"));

    // scores each filled-in text by its length
    let out = nordcrawl(&[
        "eval-cloze",
        "--tasks",
        p(&tasks),
        "--scorer",
        "external-command",
        "--command",
        "wc -c",
        "--json",
    ]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["scored"], 40);
    for item in report["items"].as_array().unwrap() {
        let scores: Vec<f64> = item["scores"].as_array().unwrap().iter().map(|s| s.as_f64().unwrap()).collect();
        let best = scores.iter().cloned().fold(f64::MIN, f64::max);
        let first_best = scores.iter().position(|&s| s == best).unwrap();
        assert_eq!(item["choice"], first_best);
    }
}
