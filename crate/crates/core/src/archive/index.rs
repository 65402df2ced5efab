//! Pointer tables: scanning local WARC files, and the tab-separated pointer
//! file format (`target_uri`, `warc_path`, `offset`, `length`).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::gzip::MemberReader;
use super::record::WarcPointer;
use super::warc::parse_records;
use super::ArchiveError;

/// Archive stem shared by a WET file and the WARC file it was derived from.
pub fn archive_stem(path: &str) -> &str {
    let name = path.rsplit('/').next().unwrap_or(path);
    for suffix in [".warc.wet.gz", ".wet.gz", ".warc.gz", ".gz"] {
        if let Some(stem) = name.strip_suffix(suffix) {
            return stem;
        }
    }
    name
}

/// Lookup from target URI to response-record pointers.
#[derive(Debug, Default, Clone)]
pub struct WarcIndex {
    by_uri: HashMap<String, Vec<WarcPointer>>,
}

impl WarcIndex {
    pub fn insert(&mut self, pointer: WarcPointer) {
        self.by_uri.entry(pointer.target_uri.clone()).or_default().push(pointer);
    }

    pub fn len(&self) -> usize {
        self.by_uri.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_uri.is_empty()
    }

    /// First capture of `uri` in an archive whose stem matches `stem`, falling back
    /// to the first capture anywhere.
    pub fn lookup(&self, uri: &str, stem: &str) -> Option<&WarcPointer> {
        let candidates = self.by_uri.get(uri)?;
        candidates
            .iter()
            .find(|p| archive_stem(&p.warc_path) == stem)
            .or_else(|| candidates.first())
    }

    /// Every pointer, ordered by archive and offset.
    pub fn pointers(&self) -> Vec<WarcPointer> {
        let mut all: Vec<WarcPointer> = self.by_uri.values().flatten().cloned().collect();
        all.sort_by(|a, b| (&a.warc_path, a.record_offset).cmp(&(&b.warc_path, b.record_offset)));
        all
    }

    /// Indexes every `response` record of the `*.warc.gz` files in `dir`.
    pub fn scan_dir(dir: &Path) -> Result<Self, ArchiveError> {
        let mut index = Self::default();
        for name in sorted_files(dir, ".warc.gz")? {
            let path = dir.join(&name);
            let file = File::open(&path).map_err(|source| ArchiveError::Io {
                path: path.display().to_string(),
                source,
            })?;
            for member in MemberReader::new(BufReader::new(file)) {
                let member = match member {
                    Ok(m) => m,
                    Err(e) => {
                        tracing::warn!(archive = %name, error = %e, "skipping member while indexing");
                        continue;
                    }
                };
                let Ok(records) = parse_records(&member.data) else { continue };
                for rec in records {
                    if rec.warc_type().is_some_and(|t| t.eq_ignore_ascii_case("response")) {
                        if let Some(uri) = rec.target_uri() {
                            index.insert(WarcPointer {
                                warc_path: name.clone(),
                                record_offset: member.offset,
                                record_length: member.length,
                                target_uri: uri.to_string(),
                            });
                        }
                    }
                }
            }
        }
        Ok(index)
    }

    /// Loads a pointer file.
    pub fn read_pointer_file(path: &Path) -> Result<Self, ArchiveError> {
        let mut index = Self::default();
        for p in read_pointers(path)? {
            index.insert(p);
        }
        Ok(index)
    }
}

pub fn read_pointers(path: &Path) -> Result<Vec<WarcPointer>, ArchiveError> {
    let io_err = |source| ArchiveError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let bad = || ArchiveError::PointerFile {
            path: path.display().to_string(),
            line: n + 1,
        };
        if cols.len() != 4 {
            return Err(bad());
        }
        out.push(WarcPointer {
            target_uri: cols[0].to_string(),
            warc_path: cols[1].to_string(),
            record_offset: cols[2].parse().map_err(|_| bad())?,
            record_length: cols[3].parse().map_err(|_| bad())?,
        });
    }
    Ok(out)
}

pub fn write_pointers<W: Write>(mut w: W, pointers: &[WarcPointer]) -> std::io::Result<()> {
    for p in pointers {
        writeln!(w, "{}\t{}\t{}\t{}", p.target_uri, p.warc_path, p.record_offset, p.record_length)?;
    }
    Ok(())
}

/// File names in `dir` ending with `suffix`, sorted.
pub fn sorted_files(dir: &Path, suffix: &str) -> Result<Vec<String>, ArchiveError> {
    let entries = std::fs::read_dir(dir).map_err(|source| ArchiveError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut names: Vec<String> = entries
        .filter_map(Result::ok)
        .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.ends_with(suffix))
        .collect();
    names.sort();
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems_match_between_wet_and_warc() {
        assert_eq!(archive_stem("crawl/wet/CC-MAIN-1.warc.wet.gz"), "CC-MAIN-1");
        assert_eq!(archive_stem("CC-MAIN-1.warc.gz"), "CC-MAIN-1");
    }

    #[test]
    fn lookup_prefers_matching_archive() {
        let mut idx = WarcIndex::default();
        let p = |path: &str| WarcPointer {
            warc_path: path.into(),
            record_offset: 0,
            record_length: 10,
            target_uri: "http://a.se/".into(),
        };
        idx.insert(p("x.warc.gz"));
        idx.insert(p("y.warc.gz"));
        assert_eq!(idx.lookup("http://a.se/", "y").unwrap().warc_path, "y.warc.gz");
        assert_eq!(idx.lookup("http://a.se/", "z").unwrap().warc_path, "x.warc.gz");
        assert!(idx.lookup("http://b.se/", "x").is_none());
    }
}
