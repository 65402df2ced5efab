//! Gzip member framing.
//!
//! Web archives store one record per gzip member and concatenate the members.
//! [`MemberReader`] walks such a stream member by member, tracking byte offsets
//! so records can be addressed later with an (offset, length) pointer. A member
//! that fails to decode is reported and the reader resynchronises on the next
//! gzip magic header.

use std::io::{self, BufRead, Read};

use flate2::bufread::GzDecoder;

const GZIP_MAGIC: [u8; 3] = [0x1f, 0x8b, 0x08];

/// One decoded gzip member and its position in the compressed stream.
#[derive(Debug, Clone)]
pub struct Member {
    pub offset: u64,
    pub length: u64,
    pub data: Vec<u8>,
}

#[derive(Debug, thiserror::Error)]
pub enum MemberError {
    #[error("corrupt gzip member at offset {offset}: {source}")]
    Corrupt { offset: u64, source: io::Error },
    #[error("{skipped} bytes of non-gzip data at offset {offset}")]
    Garbage { offset: u64, skipped: u64 },
    #[error("i/o error at offset {offset}: {source}")]
    Io { offset: u64, source: io::Error },
}

impl MemberError {
    pub fn offset(&self) -> u64 {
        match self {
            MemberError::Corrupt { offset, .. }
            | MemberError::Garbage { offset, .. }
            | MemberError::Io { offset, .. } => *offset,
        }
    }
}

/// A `BufRead` adapter counting consumed bytes.
pub(crate) struct Counting<R> {
    inner: R,
    pos: u64,
}

impl<R: BufRead> Counting<R> {
    pub(crate) fn new(inner: R) -> Self {
        Self { inner, pos: 0 }
    }
}

impl<R: BufRead> Read for Counting<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.pos += n as u64;
        Ok(n)
    }
}

impl<R: BufRead> BufRead for Counting<R> {
    fn fill_buf(&mut self) -> io::Result<&[u8]> {
        self.inner.fill_buf()
    }

    fn consume(&mut self, amt: usize) {
        self.pos += amt as u64;
        self.inner.consume(amt)
    }
}

/// Iterates over the gzip members of a concatenated stream.
pub struct MemberReader<R> {
    inner: Counting<R>,
    done: bool,
}

impl<R: BufRead> MemberReader<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner: Counting::new(inner),
            done: false,
        }
    }

    /// Bytes consumed from the underlying stream so far.
    pub fn position(&self) -> u64 {
        self.inner.pos
    }

    /// Advances to the next gzip magic header. Returns the number of bytes skipped
    /// and whether a candidate header was found before end of stream.
    fn seek_magic(&mut self) -> io::Result<(u64, bool)> {
        let mut skipped = 0u64;
        loop {
            let buf = self.inner.fill_buf()?;
            if buf.is_empty() {
                return Ok((skipped, false));
            }
            match find_magic(buf) {
                Some(0) => return Ok((skipped, true)),
                Some(i) => {
                    self.inner.consume(i);
                    skipped += i as u64;
                }
                None => {
                    let n = buf.len();
                    self.inner.consume(n);
                    skipped += n as u64;
                }
            }
        }
    }
}

/// Position of the first full magic header, or of a magic prefix cut off by the
/// end of the buffer.
fn find_magic(buf: &[u8]) -> Option<usize> {
    (0..buf.len()).find(|&i| {
        let tail = &buf[i..];
        let n = tail.len().min(GZIP_MAGIC.len());
        tail[..n] == GZIP_MAGIC[..n]
    })
}

impl<R: BufRead> Iterator for MemberReader<R> {
    type Item = Result<Member, MemberError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let start = self.inner.pos;
        let skipped = match self.seek_magic() {
            Ok((skipped, true)) => skipped,
            Ok((skipped, false)) => {
                self.done = true;
                return (skipped > 0).then_some(Err(MemberError::Garbage {
                    offset: start,
                    skipped,
                }));
            }
            Err(source) => {
                self.done = true;
                return Some(Err(MemberError::Io { offset: start, source }));
            }
        };
        if skipped > 0 {
            return Some(Err(MemberError::Garbage {
                offset: start,
                skipped,
            }));
        }

        let offset = self.inner.pos;
        let mut data = Vec::new();
        let result = GzDecoder::new(&mut self.inner).read_to_end(&mut data);
        match result {
            Ok(_) => Some(Ok(Member {
                offset,
                length: self.inner.pos - offset,
                data,
            })),
            Err(source) => {
                if self.inner.pos == offset {
                    // Step past the bad magic so the next scan makes progress.
                    self.inner.consume(1);
                }
                Some(Err(MemberError::Corrupt { offset, source }))
            }
        }
    }
}

/// Decodes exactly one gzip member from `bytes`, rejecting trailing data.
pub fn decode_single_member(bytes: &[u8]) -> io::Result<Vec<u8>> {
    if !bytes.starts_with(&GZIP_MAGIC) {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "missing gzip magic"));
    }
    let mut decoder = GzDecoder::new(bytes);
    let mut out = Vec::new();
    decoder.read_to_end(&mut out)?;
    Ok(out)
}

/// Compresses `data` as a standalone gzip member.
pub fn encode_member(data: &[u8]) -> Vec<u8> {
    use flate2::{write::GzEncoder, Compression};
    use std::io::Write;
    let mut enc = GzEncoder::new(Vec::new(), Compression::default());
    enc.write_all(data).expect("writing to a Vec cannot fail");
    enc.finish().expect("writing to a Vec cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(parts: &[&[u8]]) -> Vec<u8> {
        parts.iter().flat_map(|p| encode_member(p)).collect()
    }

    #[test]
    fn offsets_address_each_member() {
        let bytes = stream(&[b"first", b"second record", b"third"]);
        let members: Vec<Member> = MemberReader::new(&bytes[..]).map(Result::unwrap).collect();
        assert_eq!(members.len(), 3);
        assert_eq!(members[0].offset, 0);
        for m in &members {
            let slice = &bytes[m.offset as usize..(m.offset + m.length) as usize];
            assert_eq!(decode_single_member(slice).unwrap(), m.data);
        }
        let last = members.last().unwrap();
        assert_eq!(last.offset + last.length, bytes.len() as u64);
    }

    #[test]
    fn truncated_tail_is_one_error() {
        let bytes = stream(&[b"alpha", b"beta"]);
        let cut = &bytes[..bytes.len() - 4];
        let items: Vec<_> = MemberReader::new(cut).collect();
        assert_eq!(items.len(), 2);
        assert_eq!(items[0].as_ref().unwrap().data, b"alpha");
        assert!(matches!(items[1], Err(MemberError::Corrupt { .. })));
    }

    #[test]
    fn resyncs_after_garbage() {
        let mut bytes = b"junk!".to_vec();
        bytes.extend(stream(&[b"ok"]));
        let items: Vec<_> = MemberReader::new(&bytes[..]).collect();
        assert!(matches!(items[0], Err(MemberError::Garbage { skipped: 5, .. })));
        assert_eq!(items[1].as_ref().unwrap().data, b"ok");
        assert_eq!(items.len(), 2);
    }

    #[test]
    fn empty_stream_yields_nothing() {
        assert_eq!(MemberReader::new(&b""[..]).count(), 0);
    }
}
