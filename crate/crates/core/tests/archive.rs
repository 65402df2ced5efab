use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use nordcrawl_core::archive::index::write_pointers;
use nordcrawl_core::archive::*;
use nordcrawl_core::pipeline::{read_output, run, PipelineConfig, WarcSource};

fn warc_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/crawl/warc")
}

#[derive(Clone, Copy, Debug)]
enum Reply {
    /// Honour the Range header.
    Partial,
    /// Send the whole file with 200.
    Full,
    Status(u16),
}

/// Serves files under `root`; each request pops the next scripted reply,
/// falling back to `Partial`.
struct Server {
    url: String,
    hits: Arc<AtomicUsize>,
    script: Arc<Mutex<VecDeque<Reply>>>,
}

fn serve(root: PathBuf, script: Vec<Reply>) -> Server {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let script = Arc::new(Mutex::new(VecDeque::from(script)));
    let (h, s) = (hits.clone(), script.clone());
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { continue };
            h.fetch_add(1, Ordering::SeqCst);
            let reply = s.lock().unwrap().pop_front().unwrap_or(Reply::Partial);
            let _ = handle(stream, &root, reply);
        }
    });
    Server { url, hits, script }
}

fn handle(stream: TcpStream, root: &Path, reply: Reply) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request = String::new();
    reader.read_line(&mut request)?;
    let mut range = None;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        if line.trim().is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("range") {
                let v = v.trim().trim_start_matches("bytes=");
                let (a, b) = v.split_once('-').unwrap();
                range = Some((a.parse::<usize>().unwrap(), b.parse::<usize>().unwrap()));
            }
        }
    }
    let path = request.split_whitespace().nth(1).unwrap_or("/").trim_start_matches('/');
    let body = std::fs::read(root.join(path));
    let mut out = stream;
    let (status, bytes) = match (reply, body) {
        (Reply::Status(s), _) => (s, Vec::new()),
        (_, Err(_)) => (404, Vec::new()),
        (Reply::Full, Ok(b)) => (200, b),
        (Reply::Partial, Ok(b)) => match range {
            Some((a, z)) => (206, b[a..=z.min(b.len() - 1)].to_vec()),
            None => (200, b),
        },
    };
    write!(
        out,
        "HTTP/1.1 {status} X\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        bytes.len()
    )?;
    out.write_all(&bytes)?;
    out.flush()
}

fn http(server: &Server, cache: Option<PathBuf>) -> HttpSource {
    let mut cfg = HttpConfig::new(&server.url);
    cfg.cache_dir = cache;
    cfg.initial_backoff = Duration::from_millis(5);
    cfg.timeout = Duration::from_secs(10);
    HttpSource::new(cfg)
}

fn pointers() -> Vec<WarcPointer> {
    WarcIndex::scan_dir(&warc_dir()).unwrap().pointers()
}

#[test]
fn range_requests_return_the_same_records_as_local_reads() {
    let server = serve(warc_dir(), vec![]);
    let src = http(&server, None);
    let local = LocalArchives::new(warc_dir());
    let ps = pointers();
    assert!(ps.len() >= 8);
    for p in &ps {
        assert_eq!(src.fetch_member(p).unwrap(), local.fetch_member(p).unwrap(), "{p}");
        assert_eq!(src.fetch_document(p).unwrap(), local.fetch_document(p).unwrap());
    }
    assert_eq!(server.hits.load(Ordering::SeqCst), 2 * ps.len());
}

#[test]
fn full_body_replies_are_cut_to_the_record() {
    let server = serve(warc_dir(), vec![Reply::Full]);
    let p = &pointers()[1];
    let got = http(&server, None).fetch_member(p).unwrap();
    assert_eq!(got, LocalArchives::new(warc_dir()).fetch_member(p).unwrap());
}

#[test]
fn server_errors_are_retried_and_client_errors_are_not() {
    let p = &pointers()[0];
    let server = serve(warc_dir(), vec![Reply::Status(503), Reply::Status(500)]);
    assert!(http(&server, None).fetch_member(p).is_ok());
    assert_eq!(server.hits.load(Ordering::SeqCst), 3);

    let server = serve(warc_dir(), vec![Reply::Status(503); 3]);
    let err = http(&server, None).fetch_member(p).unwrap_err();
    assert!(err.to_string().contains("3 attempts"), "{err}");

    let server = serve(warc_dir(), vec![Reply::Status(403)]);
    let err = http(&server, None).fetch_member(p).unwrap_err();
    assert!(err.to_string().contains("403"), "{err}");
    assert_eq!(server.hits.load(Ordering::SeqCst), 1);
}

#[test]
fn cached_records_skip_the_network() {
    let cache = tempfile::tempdir().unwrap();
    let server = serve(warc_dir(), vec![]);
    let src = http(&server, Some(cache.path().to_path_buf()));
    let p = &pointers()[2];
    let first = src.fetch_member(p).unwrap();
    server.script.lock().unwrap().extend([Reply::Status(500); 10]);
    assert_eq!(src.fetch_member(p).unwrap(), first);
    assert_eq!(server.hits.load(Ordering::SeqCst), 1);
}

#[test]
fn pipeline_over_http_matches_local_run() {
    let tmp = tempfile::tempdir().unwrap();
    let pointer_file = tmp.path().join("pointers.tsv");
    let mut buf = Vec::new();
    write_pointers(&mut buf, &pointers()).unwrap();
    std::fs::write(&pointer_file, &buf).unwrap();
    let round: Vec<WarcPointer> = nordcrawl_core::archive::index::read_pointers(&pointer_file).unwrap();
    assert_eq!(round, pointers());

    let server = serve(warc_dir(), vec![]);
    let base = PipelineConfig {
        snapshot: "CC-FIXTURE".into(),
        wet_dir: warc_dir().with_file_name("wet"),
        workers: 2,
        resume: false,
        ..Default::default()
    };
    let local = PipelineConfig {
        warc: WarcSource {
            dir: Some(warc_dir()),
            ..Default::default()
        },
        output_dir: tmp.path().join("local"),
        ..base.clone()
    };
    let remote = PipelineConfig {
        warc: WarcSource {
            base_url: Some(server.url.clone()),
            pointers: Some(pointer_file),
            cache_dir: Some(tmp.path().join("cache")),
            ..Default::default()
        },
        output_dir: tmp.path().join("remote"),
        ..base
    };
    let a = run(&local).unwrap();
    let b = run(&remote).unwrap();
    assert_eq!(a, b);
    assert_eq!(read_output(&local.output_dir).unwrap(), read_output(&remote.output_dir).unwrap());
}

#[test]
fn wet_round_trip_keeps_records() {
    let records = vec![
        WetRecord {
            target_uri: "https://a.example/".into(),
            warc_date: "2023-01-01T00:00:00Z".into(),
            text: "första raden\nandra raden".into(),
        },
        WetRecord {
            target_uri: "https://b.example/x".into(),
            warc_date: "2023-01-02T00:00:00Z".into(),
            text: "ø æ å þ ð".into(),
        },
    ];
    let bytes = write_wet(&records);
    let mut reader = read_wet(&bytes[..]);
    let back: Vec<WetRecord> = reader.by_ref().collect();
    assert_eq!(back, records);
    assert_eq!(reader.tally().malformed, 0);
    let mut raw = Vec::new();
    flate2::read::MultiGzDecoder::new(&bytes[..]).read_to_end(&mut raw).unwrap();
    assert!(raw.starts_with(b"WARC/1.0\r\n"));
}
