//! WARC/1.0 record framing: version line, header block, blank line, content
//! block of `Content-Length` bytes, then two CRLFs.

use std::fmt;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum WarcError {
    #[error("missing WARC version line")]
    MissingVersion,
    #[error("malformed header line {0:?}")]
    BadHeader(String),
    #[error("header block not terminated")]
    UnterminatedHeaders,
    #[error("missing or invalid Content-Length")]
    ContentLength,
    #[error("content block truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
}

/// Ordered header list with case-insensitive lookup.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Headers(Vec<(String, String)>);

impl Headers {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    /// Replaces the first header with this name, or appends it.
    pub fn set(&mut self, name: &str, value: impl Into<String>) {
        let value = value.into();
        match self.0.iter_mut().find(|(k, _)| k.eq_ignore_ascii_case(name)) {
            Some(slot) => slot.1 = value,
            None => self.0.push((name.to_string(), value)),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, value: impl Into<String>) {
        self.0.push((name.into(), value.into()));
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarcRecord {
    pub version: String,
    pub headers: Headers,
    pub block: Vec<u8>,
}

impl WarcRecord {
    /// A WARC/1.0 record with the common headers filled in.
    pub fn new(warc_type: &str, target_uri: &str, date: &str, content_type: &str, block: Vec<u8>) -> Self {
        let mut headers = Headers::new();
        headers.push("WARC-Type", warc_type);
        headers.push("WARC-Target-URI", target_uri);
        headers.push("WARC-Date", date);
        let id = xxhash_rust::xxh3::xxh3_128(format!("{warc_type}\0{target_uri}\0{date}").as_bytes());
        headers.push("WARC-Record-ID", format!("<urn:uuid:{}>", format_uuid(id)));
        headers.push("Content-Type", content_type);
        headers.push("Content-Length", block.len().to_string());
        Self {
            version: "WARC/1.0".to_string(),
            headers,
            block,
        }
    }

    pub fn warc_type(&self) -> Option<&str> {
        self.headers.get("WARC-Type")
    }

    pub fn target_uri(&self) -> Option<&str> {
        self.headers.get("WARC-Target-URI").map(strip_angle_brackets)
    }

    pub fn date(&self) -> Option<&str> {
        self.headers.get("WARC-Date")
    }

    /// Serialises the record; `Content-Length` is rewritten to match the block.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut headers = self.headers.clone();
        headers.set("Content-Length", self.block.len().to_string());
        let mut out = Vec::with_capacity(self.block.len() + 256);
        out.extend_from_slice(self.version.as_bytes());
        out.extend_from_slice(b"\r\n");
        for (k, v) in headers.iter() {
            out.extend_from_slice(k.as_bytes());
            out.extend_from_slice(b": ");
            out.extend_from_slice(v.as_bytes());
            out.extend_from_slice(b"\r\n");
        }
        out.extend_from_slice(b"\r\n");
        out.extend_from_slice(&self.block);
        out.extend_from_slice(b"\r\n\r\n");
        out
    }
}

impl fmt::Display for WarcRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} ({} bytes)",
            self.warc_type().unwrap_or("?"),
            self.target_uri().unwrap_or("-"),
            self.block.len()
        )
    }
}

fn format_uuid(v: u128) -> String {
    let h = format!("{v:032x}");
    format!("{}-{}-{}-{}-{}", &h[..8], &h[8..12], &h[12..16], &h[16..20], &h[20..])
}

// Some writers (WARC/0.x era) wrap URIs in angle brackets.
fn strip_angle_brackets(s: &str) -> &str {
    s.strip_prefix('<').and_then(|s| s.strip_suffix('>')).unwrap_or(s)
}

/// Splits off one line (without its terminator). Accepts `\r\n` or bare `\n`.
fn take_line(data: &[u8]) -> Option<(&[u8], &[u8])> {
    let nl = data.iter().position(|&b| b == b'\n')?;
    let line = &data[..nl];
    let line = line.strip_suffix(b"\r").unwrap_or(line);
    Some((line, &data[nl + 1..]))
}

/// Parses a header block up to and including the terminating blank line.
pub(crate) fn parse_header_lines(mut data: &[u8]) -> Result<(Headers, &[u8]), WarcError> {
    let mut headers: Vec<(String, String)> = Vec::new();
    loop {
        let (line, rest) = take_line(data).ok_or(WarcError::UnterminatedHeaders)?;
        data = rest;
        if line.is_empty() {
            return Ok((Headers(headers), data));
        }
        let text = String::from_utf8_lossy(line);
        if line[0] == b' ' || line[0] == b'\t' {
            // Folded continuation of the previous value.
            match headers.last_mut() {
                Some(last) => {
                    last.1.push(' ');
                    last.1.push_str(text.trim());
                }
                None => return Err(WarcError::BadHeader(text.into_owned())),
            }
            continue;
        }
        let (name, value) = text
            .split_once(':')
            .ok_or_else(|| WarcError::BadHeader(text.to_string()))?;
        headers.push((name.trim().to_string(), value.trim().to_string()));
    }
}

/// Parses every record contained in `data` (normally exactly one per gzip member).
pub fn parse_records(mut data: &[u8]) -> Result<Vec<WarcRecord>, WarcError> {
    let mut records = Vec::new();
    loop {
        while let Some((&b, rest)) = data.split_first() {
            if b == b'\r' || b == b'\n' {
                data = rest;
            } else {
                break;
            }
        }
        if data.is_empty() {
            return Ok(records);
        }
        let (record, rest) = parse_one(data)?;
        records.push(record);
        data = rest;
    }
}

fn parse_one(data: &[u8]) -> Result<(WarcRecord, &[u8]), WarcError> {
    let (version, rest) = take_line(data).ok_or(WarcError::MissingVersion)?;
    if !version.starts_with(b"WARC/") {
        return Err(WarcError::MissingVersion);
    }
    let version = String::from_utf8_lossy(version).trim().to_string();
    let (headers, rest) = parse_header_lines(rest)?;
    let len: usize = headers
        .get("Content-Length")
        .and_then(|v| v.trim().parse().ok())
        .ok_or(WarcError::ContentLength)?;
    if rest.len() < len {
        return Err(WarcError::Truncated {
            expected: len,
            found: rest.len(),
        });
    }
    let block = rest[..len].to_vec();
    Ok((WarcRecord { version, headers, block }, &rest[len..]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_minimal_record() {
        let raw = b"WARC/1.0\r\nWARC-Type: conversion\r\nwarc-target-uri: http://a.se/\r\nContent-Length: 5\r\n\r\nhello\r\n\r\n";
        let recs = parse_records(raw).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].warc_type(), Some("conversion"));
        assert_eq!(recs[0].target_uri(), Some("http://a.se/"));
        assert_eq!(recs[0].block, b"hello");
    }

    #[test]
    fn bare_newlines_and_folded_headers() {
        let raw = b"WARC/1.0\nWARC-Type: response\nX-Long: a\n  b\nContent-Length: 2\n\nok";
        let recs = parse_records(raw).unwrap();
        assert_eq!(recs[0].headers.get("x-long"), Some("a b"));
        assert_eq!(recs[0].block, b"ok");
    }

    #[test]
    fn truncated_block_is_an_error() {
        let raw = b"WARC/1.0\r\nContent-Length: 10\r\n\r\nshort";
        assert_eq!(
            parse_records(raw),
            Err(WarcError::Truncated { expected: 10, found: 5 })
        );
    }

    #[test]
    fn missing_version_is_an_error() {
        assert_eq!(parse_records(b"HTTP/1.1 200 OK\r\n\r\n"), Err(WarcError::MissingVersion));
    }

    #[test]
    fn angle_bracket_uri() {
        let mut r = WarcRecord::new("response", "x", "2024-01-01T00:00:00Z", "text/plain", vec![]);
        r.headers.set("WARC-Target-URI", "<http://b.no/>");
        assert_eq!(r.target_uri(), Some("http://b.no/"));
    }

    proptest! {
        #[test]
        fn reserialising_preserves_payload(
            payload in proptest::collection::vec(any::<u8>(), 0..400),
            uri in "https?://[a-z]{1,12}\\.(se|dk|no|is)/[a-z0-9/]{0,20}",
        ) {
            let rec = WarcRecord::new("conversion", &uri, "2024-02-20T10:00:00Z", "text/plain", payload.clone());
            let parsed = parse_records(&rec.to_bytes()).unwrap();
            prop_assert_eq!(parsed.len(), 1);
            prop_assert_eq!(&parsed[0].block, &payload);
            let again = parse_records(&parsed[0].to_bytes()).unwrap();
            prop_assert_eq!(&again[0].block, &payload);
            prop_assert_eq!(again[0].target_uri(), Some(uri.as_str()));
        }
    }
}
