//! Record sources: local archive files, or HTTP range requests with an on-disk
//! cache keyed by (warc_path, offset).

use std::fs;
use std::path::PathBuf;
use std::thread;
use std::time::Duration;

use super::record::{parse_response_member, read_member, FetchOutcome, WarcPointer};
use super::ArchiveError;
use crate::atomic::write_atomic;

/// Anything that can hand back the compressed bytes a pointer designates.
pub trait RecordSource: Send + Sync {
    fn fetch_member(&self, pointer: &WarcPointer) -> Result<Vec<u8>, ArchiveError>;

    fn fetch_document(&self, pointer: &WarcPointer) -> Result<FetchOutcome, ArchiveError> {
        let member = self.fetch_member(pointer)?;
        parse_response_member(&member, pointer)
    }
}

/// Archives on local disk; `warc_path` is resolved relative to `root`.
#[derive(Debug, Clone)]
pub struct LocalArchives {
    root: PathBuf,
}

impl LocalArchives {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
}

impl RecordSource for LocalArchives {
    fn fetch_member(&self, pointer: &WarcPointer) -> Result<Vec<u8>, ArchiveError> {
        read_member(&self.root.join(&pointer.warc_path), pointer)
    }
}

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub base_url: String,
    pub cache_dir: Option<PathBuf>,
    pub attempts: u32,
    pub initial_backoff: Duration,
    pub timeout: Duration,
}

impl HttpConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            cache_dir: None,
            attempts: 3,
            initial_backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(60),
        }
    }
}

/// Fetches records with `Range` requests against `base_url/warc_path`.
pub struct HttpSource {
    config: HttpConfig,
    agent: ureq::Agent,
}

impl HttpSource {
    pub fn new(config: HttpConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    fn cache_path(&self, pointer: &WarcPointer) -> Option<PathBuf> {
        let dir = self.config.cache_dir.as_ref()?;
        let safe: String = pointer
            .warc_path
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' { c } else { '_' })
            .collect();
        Some(dir.join(safe).join(format!("{}.gz", pointer.record_offset)))
    }

    fn request(&self, pointer: &WarcPointer) -> Result<Vec<u8>, Attempt> {
        let url = format!(
            "{}/{}",
            self.config.base_url.trim_end_matches('/'),
            pointer.warc_path.trim_start_matches('/')
        );
        let first = pointer.record_offset;
        let last = first + pointer.record_length - 1;
        let mut resp = self
            .agent
            .get(&url)
            .header("Range", &format!("bytes={first}-{last}"))
            .call()
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status().as_u16();
        let limit = pointer.record_length.max(1 << 20) + (first + 1);
        let body = resp
            .body_mut()
            .with_config()
            .limit(limit)
            .read_to_vec()
            .map_err(|e| Attempt::Retry(e.to_string()));
        match status {
            206 => body,
            // Server ignored the range; cut the record out of the full body.
            200 => {
                let body = body?;
                body.get(first as usize..=last as usize)
                    .map(<[u8]>::to_vec)
                    .ok_or_else(|| Attempt::Fatal(format!("body of {} bytes too short", body.len())))
            }
            500..=599 | 429 => Err(Attempt::Retry(format!("HTTP {status}"))),
            _ => Err(Attempt::Fatal(format!("HTTP {status}"))),
        }
    }
}

enum Attempt {
    Retry(String),
    Fatal(String),
}

impl RecordSource for HttpSource {
    fn fetch_member(&self, pointer: &WarcPointer) -> Result<Vec<u8>, ArchiveError> {
        let cache = self.cache_path(pointer);
        if let Some(path) = &cache {
            if let Ok(bytes) = fs::read(path) {
                if bytes.len() as u64 == pointer.record_length {
                    return Ok(bytes);
                }
            }
        }
        let mut backoff = self.config.initial_backoff;
        let mut last_err = String::new();
        for attempt in 1..=self.config.attempts.max(1) {
            match self.request(pointer) {
                Ok(bytes) => {
                    if let Some(path) = &cache {
                        if let Err(e) = write_atomic(path, &bytes) {
                            tracing::warn!(error = %e, path = %path.display(), "could not cache record");
                        }
                    }
                    return Ok(bytes);
                }
                Err(Attempt::Fatal(msg)) => {
                    return Err(ArchiveError::Fetch {
                        pointer: pointer.to_string(),
                        detail: msg,
                    })
                }
                Err(Attempt::Retry(msg)) => {
                    tracing::debug!(attempt, %pointer, error = %msg, "fetch failed");
                    last_err = msg;
                    if attempt < self.config.attempts {
                        thread::sleep(backoff);
                        backoff *= 2;
                    }
                }
            }
        }
        Err(ArchiveError::Fetch {
            pointer: pointer.to_string(),
            detail: format!("gave up after {} attempts: {last_err}", self.config.attempts),
        })
    }
}

