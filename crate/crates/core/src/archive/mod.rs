//! Reading WET and WARC archives.

pub mod charset;
pub mod fetch;
pub mod gzip;
pub mod index;
pub mod record;
pub mod warc;
pub mod wet;

pub use fetch::{HttpConfig, HttpSource, LocalArchives, RecordSource};
pub use index::{archive_stem, WarcIndex};
pub use record::{read_warc_record, FetchOutcome, RawDocument, SkipReason, WarcPointer};
pub use warc::WarcRecord;
pub use wet::{read_wet, write_wet, ArchiveTally, WetReader, WetRecord};

#[derive(Debug, thiserror::Error)]
pub enum ArchiveError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("pointer {pointer} lies outside the archive ({size} bytes)")]
    OutOfBounds { pointer: String, size: u64 },
    #[error("pointer {pointer} is not at a gzip member boundary")]
    NotMemberBoundary { pointer: String },
    #[error("corrupt record at {pointer}: {detail}")]
    Corrupt { pointer: String, detail: String },
    #[error("fetching {pointer}: {detail}")]
    Fetch { pointer: String, detail: String },
    #[error("{path}:{line}: expected 4 tab-separated columns (uri, path, offset, length)")]
    PointerFile { path: String, line: usize },
}
