//! Streaming reader for WET (extracted-text) archives.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Read};

use serde::{Deserialize, Serialize};

use super::gzip::{Member, MemberReader};
use super::warc::{parse_records, WarcRecord};

/// Plain-text conversion of one crawled page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WetRecord {
    pub target_uri: String,
    pub warc_date: String,
    pub text: String,
}

impl WetRecord {
    pub fn lines(&self) -> impl Iterator<Item = &str> {
        self.text.split('\n')
    }
}

/// Per-archive counters for records that could not be used.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveTally {
    /// Gzip members that failed to decode or did not contain a WARC record.
    pub malformed: usize,
    pub missing_target_uri: usize,
    /// Records of other WARC types (warcinfo, metadata, ...).
    pub other_types: usize,
    /// U+FFFD substitutions made while decoding payloads.
    pub replacement_chars: usize,
}

impl ArchiveTally {
    pub fn merge(&mut self, other: &ArchiveTally) {
        self.malformed += other.malformed;
        self.missing_target_uri += other.missing_target_uri;
        self.other_types += other.other_types;
        self.replacement_chars += other.replacement_chars;
    }
}

/// Iterator over the `conversion` records of a WET archive, in file order.
pub struct WetReader<R> {
    members: MemberReader<R>,
    pending: VecDeque<WetRecord>,
    tally: ArchiveTally,
}

/// Reads a gzip-member WET stream.
pub fn read_wet<R: Read>(stream: R) -> WetReader<BufReader<R>> {
    WetReader::new(BufReader::new(stream))
}

impl<R: BufRead> WetReader<R> {
    pub fn new(inner: R) -> Self {
        Self {
            members: MemberReader::new(inner),
            pending: VecDeque::new(),
            tally: ArchiveTally::default(),
        }
    }

    pub fn tally(&self) -> &ArchiveTally {
        &self.tally
    }

    fn absorb(&mut self, member: Member) {
        let records = match parse_records(&member.data) {
            Ok(r) if !r.is_empty() => r,
            Ok(_) | Err(_) => {
                tracing::debug!(offset = member.offset, "member without a parseable WARC record");
                self.tally.malformed += 1;
                return;
            }
        };
        for record in records {
            self.absorb_record(record);
        }
    }

    fn absorb_record(&mut self, record: WarcRecord) {
        if !record
            .warc_type()
            .is_some_and(|t| t.eq_ignore_ascii_case("conversion"))
        {
            self.tally.other_types += 1;
            return;
        }
        let target_uri = match record.target_uri() {
            Some(u) if !u.trim().is_empty() => u.trim().to_string(),
            _ => {
                self.tally.missing_target_uri += 1;
                return;
            }
        };
        let warc_date = record.date().unwrap_or_default().to_string();
        let decoded = String::from_utf8_lossy(&record.block);
        self.tally.replacement_chars += decoded.matches('\u{FFFD}').count();
        let text = decoded.replace("\r\n", "\n").replace('\r', "\n");
        self.pending.push_back(WetRecord {
            target_uri,
            warc_date,
            text,
        });
    }
}

impl<R: BufRead> Iterator for WetReader<R> {
    type Item = WetRecord;

    fn next(&mut self) -> Option<WetRecord> {
        loop {
            if let Some(r) = self.pending.pop_front() {
                return Some(r);
            }
            match self.members.next()? {
                Ok(member) => self.absorb(member),
                Err(e) => {
                    tracing::warn!(error = %e, "skipping malformed gzip member");
                    self.tally.malformed += 1;
                }
            }
        }
    }
}

/// Serialises WET records as a gzip-member archive, led by a `warcinfo` record.
pub fn write_wet(records: &[WetRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    let info = WarcRecord::new(
        "warcinfo",
        "",
        records.first().map(|r| r.warc_date.as_str()).unwrap_or(""),
        "application/warc-fields",
        b"software: nordcrawl\r\n".to_vec(),
    );
    out.extend(super::gzip::encode_member(&info.to_bytes()));
    for r in records {
        let rec = WarcRecord::new(
            "conversion",
            &r.target_uri,
            &r.warc_date,
            "text/plain",
            r.text.as_bytes().to_vec(),
        );
        out.extend(super::gzip::encode_member(&rec.to_bytes()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(uri: &str, text: &str) -> WetRecord {
        WetRecord {
            target_uri: uri.into(),
            warc_date: "2024-02-20T10:00:00Z".into(),
            text: text.into(),
        }
    }

    #[test]
    fn two_records_in_file_order() {
        let bytes = write_wet(&[rec("http://a.se/", "Hej\nvärlden"), rec("http://b.dk/", "Hej")]);
        let mut reader = read_wet(&bytes[..]);
        let got: Vec<_> = reader.by_ref().collect();
        assert_eq!(got, vec![rec("http://a.se/", "Hej\nvärlden"), rec("http://b.dk/", "Hej")]);
        assert_eq!(reader.tally().other_types, 1);
        assert_eq!(reader.tally().malformed, 0);
    }

    #[test]
    fn truncated_final_member_keeps_prior_records() {
        let records = [rec("http://a.se/", "ett"), rec("http://b.se/", "två"), rec("http://c.se/", "tre")];
        let full = write_wet(&records);
        let cut = &full[..full.len() - 10];
        let mut whole = read_wet(&full[..]);
        let expected: Vec<_> = whole.by_ref().take(2).collect();
        let mut reader = read_wet(cut);
        let got: Vec<_> = reader.by_ref().collect();
        assert_eq!(got, expected);
        assert_eq!(reader.tally().malformed, 1);
    }

    #[test]
    fn missing_target_uri_skipped() {
        let mut r = WarcRecord::new("conversion", "", "2024", "text/plain", b"x".to_vec());
        r.headers = {
            let mut h = super::super::warc::Headers::new();
            h.push("WARC-Type", "conversion");
            h
        };
        let bytes = super::super::gzip::encode_member(&r.to_bytes());
        let mut reader = read_wet(&bytes[..]);
        assert_eq!(reader.by_ref().count(), 0);
        assert_eq!(reader.tally().missing_target_uri, 1);
    }

    #[test]
    fn carriage_returns_removed_and_invalid_utf8_counted() {
        let rec = WarcRecord::new("conversion", "http://x.is/", "d", "text/plain", b"a\r\nb\xff".to_vec());
        let bytes = super::super::gzip::encode_member(&rec.to_bytes());
        let mut reader = read_wet(&bytes[..]);
        let got = reader.next().unwrap();
        assert_eq!(got.text, "a\nb\u{FFFD}");
        assert_eq!(reader.tally().replacement_chars, 1);
    }
}
