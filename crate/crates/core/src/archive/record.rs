//! Response records addressed by pointer: HTTP header stripping and body decoding.

use std::fmt;
use std::fs::File;
use std::io::{Read, Seek, SeekFrom};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::charset::decode_body;
use super::gzip::decode_single_member;
use super::warc::{parse_header_lines, parse_records};
use super::ArchiveError;

/// Location of one gzip-member record inside a WARC archive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WarcPointer {
    pub warc_path: String,
    pub record_offset: u64,
    pub record_length: u64,
    pub target_uri: String,
}

impl fmt::Display for WarcPointer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}@{}+{} ({})",
            self.warc_path, self.record_offset, self.record_length, self.target_uri
        )
    }
}

/// A fetched web page with its HTML decoded to Unicode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub url: String,
    pub warc_path: String,
    pub warc_date: String,
    pub html: String,
    #[serde(default)]
    pub replacement_chars: usize,
}

/// Why a record was passed over without failing the run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SkipReason {
    NotHtml(String),
    NotResponse(String),
    HttpStatus(u16),
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkipReason::NotHtml(ct) => write!(f, "non-HTML content type {ct:?}"),
            SkipReason::NotResponse(t) => write!(f, "WARC-Type {t:?} is not a response"),
            SkipReason::HttpStatus(s) => write!(f, "HTTP status {s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchOutcome {
    Document(RawDocument),
    Skipped(SkipReason),
}

impl FetchOutcome {
    pub fn document(self) -> Option<RawDocument> {
        match self {
            FetchOutcome::Document(d) => Some(d),
            FetchOutcome::Skipped(_) => None,
        }
    }
}

/// Reads the raw gzip member a pointer designates from a local archive file.
pub fn read_member(archive: &Path, pointer: &WarcPointer) -> Result<Vec<u8>, ArchiveError> {
    let io_err = |source| ArchiveError::Io {
        path: archive.display().to_string(),
        source,
    };
    let mut file = File::open(archive).map_err(io_err)?;
    let size = file.metadata().map_err(io_err)?.len();
    let end = pointer.record_offset.checked_add(pointer.record_length);
    if pointer.record_length == 0 || end.is_none_or(|end| end > size) {
        return Err(ArchiveError::OutOfBounds {
            pointer: pointer.to_string(),
            size,
        });
    }
    file.seek(SeekFrom::Start(pointer.record_offset)).map_err(io_err)?;
    let mut buf = vec![0u8; pointer.record_length as usize];
    file.read_exact(&mut buf).map_err(io_err)?;
    Ok(buf)
}

/// Reads and decodes the response record at `pointer` in a local archive.
pub fn read_warc_record(archive: &Path, pointer: &WarcPointer) -> Result<FetchOutcome, ArchiveError> {
    let member = read_member(archive, pointer)?;
    parse_response_member(&member, pointer)
}

/// Decodes a compressed response record into a [`RawDocument`].
pub fn parse_response_member(member: &[u8], pointer: &WarcPointer) -> Result<FetchOutcome, ArchiveError> {
    if !member.starts_with(&[0x1f, 0x8b]) {
        return Err(ArchiveError::NotMemberBoundary {
            pointer: pointer.to_string(),
        });
    }
    let data = decode_single_member(member).map_err(|e| ArchiveError::Corrupt {
        pointer: pointer.to_string(),
        detail: e.to_string(),
    })?;
    let record = parse_records(&data)
        .map_err(|e| ArchiveError::Corrupt {
            pointer: pointer.to_string(),
            detail: e.to_string(),
        })?
        .into_iter()
        .next()
        .ok_or_else(|| ArchiveError::Corrupt {
            pointer: pointer.to_string(),
            detail: "empty member".into(),
        })?;

    let warc_type = record.warc_type().unwrap_or_default();
    if !warc_type.eq_ignore_ascii_case("response") {
        return Ok(FetchOutcome::Skipped(SkipReason::NotResponse(warc_type.to_string())));
    }
    let url = record.target_uri().unwrap_or(&pointer.target_uri).to_string();
    if url != pointer.target_uri {
        tracing::warn!(%pointer, record_uri = %url, "pointer target differs from record target");
    }
    let http = parse_http_response(&record.block).map_err(|detail| ArchiveError::Corrupt {
        pointer: pointer.to_string(),
        detail,
    })?;
    if !(200..300).contains(&http.status) {
        return Ok(FetchOutcome::Skipped(SkipReason::HttpStatus(http.status)));
    }
    if let Some(ct) = &http.content_type {
        if !is_html_mime(ct) {
            return Ok(FetchOutcome::Skipped(SkipReason::NotHtml(ct.clone())));
        }
    }
    let decoded = decode_body(&http.body, http.content_type.as_deref());
    Ok(FetchOutcome::Document(RawDocument {
        url,
        warc_path: pointer.warc_path.clone(),
        warc_date: record.date().unwrap_or_default().to_string(),
        html: decoded.text,
        replacement_chars: decoded.replacements,
    }))
}

fn is_html_mime(content_type: &str) -> bool {
    let mime = content_type.split(';').next().unwrap_or("").trim().to_ascii_lowercase();
    matches!(mime.as_str(), "text/html" | "application/xhtml+xml" | "")
}

struct HttpResponse {
    status: u16,
    content_type: Option<String>,
    body: Vec<u8>,
}

fn parse_http_response(block: &[u8]) -> Result<HttpResponse, String> {
    let nl = block
        .iter()
        .position(|&b| b == b'\n')
        .ok_or("missing HTTP status line")?;
    let status_line = String::from_utf8_lossy(&block[..nl]);
    let status = status_line
        .split_whitespace()
        .nth(1)
        .and_then(|s| s.parse::<u16>().ok())
        .ok_or_else(|| format!("bad HTTP status line {:?}", status_line.trim()))?;
    let (headers, body) = parse_header_lines(&block[nl + 1..]).map_err(|e| e.to_string())?;
    let mut body = body.to_vec();
    if headers
        .get("Transfer-Encoding")
        .is_some_and(|v| v.to_ascii_lowercase().contains("chunked"))
    {
        if let Some(d) = dechunk(&body) {
            body = d;
        }
    }
    if let Some(enc) = headers.get("Content-Encoding") {
        let enc = enc.trim().to_ascii_lowercase();
        let decoded = match enc.as_str() {
            "gzip" | "x-gzip" => {
                let mut out = Vec::new();
                flate2::read::GzDecoder::new(&body[..]).read_to_end(&mut out).ok().map(|_| out)
            }
            "deflate" => {
                let mut out = Vec::new();
                flate2::read::ZlibDecoder::new(&body[..]).read_to_end(&mut out).ok().map(|_| out)
            }
            _ => None,
        };
        if let Some(d) = decoded {
            body = d;
        }
    }
    Ok(HttpResponse {
        status,
        content_type: headers.get("Content-Type").map(str::to_string),
        body,
    })
}

fn dechunk(mut data: &[u8]) -> Option<Vec<u8>> {
    let mut out = Vec::new();
    loop {
        let nl = data.iter().position(|&b| b == b'\n')?;
        let size_line = std::str::from_utf8(&data[..nl]).ok()?;
        let size_hex = size_line.split(';').next()?.trim();
        let size = usize::from_str_radix(size_hex, 16).ok()?;
        data = &data[nl + 1..];
        if size == 0 {
            return Some(out);
        }
        out.extend_from_slice(data.get(..size)?);
        data = &data[size..];
        data = data.strip_prefix(b"\r\n").or_else(|| data.strip_prefix(b"\n")).unwrap_or(data);
    }
}

/// Builds the block of a `response` record from HTTP headers and a body.
pub fn http_response_block(content_type: &str, body: &[u8]) -> Vec<u8> {
    let mut block = format!(
        "HTTP/1.1 200 OK\r\nContent-Type: {content_type}\r\nContent-Length: {}\r\n\r\n",
        body.len()
    )
    .into_bytes();
    block.extend_from_slice(body);
    block
}
