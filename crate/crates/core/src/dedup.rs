//! Near-duplicate removal with MinHash signatures and banded LSH.

use std::collections::{BTreeSet, HashMap};
use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64_with_seed;

pub const SHINGLE: usize = 16;
pub const BANDS: usize = 14;
pub const ROWS: usize = 8;
pub const HASHES: usize = BANDS * ROWS;

const MAGIC: &[u8; 4] = b"MHSG";
const VERSION: u8 = 1;

/// Stable order key of a document inside a snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DocRef {
    pub snapshot: String,
    pub warc_path: String,
    pub record_offset: u64,
}

/// Lowercased alphabetic characters only.
pub fn clean(text: &str) -> Vec<char> {
    text.chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect()
}

/// All 16-character windows of the cleaned text. Shorter non-empty text
/// is a single shingle.
pub fn shingle(text: &str) -> BTreeSet<String> {
    let c = clean(text);
    if c.is_empty() {
        return BTreeSet::new();
    }
    if c.len() < SHINGLE {
        return BTreeSet::from([c.iter().collect()]);
    }
    c.windows(SHINGLE).map(|w| w.iter().collect()).collect()
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 112 multiply-add-shift functions `h(x) = ((a*x + b) mod 2^128) >> 64`.
#[derive(Debug, Clone)]
pub struct HashFamily {
    seed: u64,
    coeffs: Vec<(u128, u128)>,
}

impl HashFamily {
    pub fn new(seed: u64) -> Self {
        let mut s = seed;
        let mut word = || ((splitmix64(&mut s) as u128) << 64) | splitmix64(&mut s) as u128;
        let coeffs = (0..HASHES).map(|_| (word() | 1, word())).collect();
        Self { seed, coeffs }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Per-function minima over the shingles; `None` for an empty set.
    pub fn minhash<'a>(&self, shingles: impl IntoIterator<Item = &'a String>) -> Option<[u64; HASHES]> {
        let mut mins = [u64::MAX; HASHES];
        let mut any = false;
        for s in shingles {
            any = true;
            let x = xxh3_64_with_seed(s.as_bytes(), self.seed) as u128;
            for (m, (a, b)) in mins.iter_mut().zip(&self.coeffs) {
                let h = (a.wrapping_mul(x).wrapping_add(*b) >> 64) as u64;
                *m = (*m).min(h);
            }
        }
        any.then_some(mins)
    }

    pub fn signature(&self, doc: DocRef, text: &str) -> MinHashSignature {
        MinHashSignature {
            doc,
            values: self.minhash(&shingle(text)),
        }
    }
}

/// Band `b` row `r` is `values[b * ROWS + r]`. Documents without shingles
/// carry no values and never match anything.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinHashSignature {
    pub doc: DocRef,
    pub values: Option<[u64; HASHES]>,
}

impl MinHashSignature {
    pub fn band(&self, b: usize) -> Option<&[u64]> {
        self.values.as_ref().map(|v| &v[b * ROWS..(b + 1) * ROWS])
    }

    /// Fraction of the 112 functions whose minima agree.
    pub fn match_rate(&self, other: &MinHashSignature) -> f64 {
        match (&self.values, &other.values) {
            (Some(a), Some(b)) => a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / HASHES as f64,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removal {
    pub removed: DocRef,
    pub kept: DocRef,
    pub band: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DedupResult {
    /// Surviving documents in key order.
    pub kept: Vec<DocRef>,
    pub removals: Vec<Removal>,
}

/// Probability that a pair with Jaccard `s` shares at least one band.
pub fn s_curve(s: f64, bands: usize, rows: usize) -> f64 {
    1.0 - (1.0 - s.powi(rows as i32)).powi(bands as i32)
}

/// For each band in turn, groups the surviving documents by that band's
/// values and keeps the one with the smallest key in each group.
pub fn band_dedup(signatures: &[MinHashSignature]) -> DedupResult {
    let mut order: Vec<&MinHashSignature> = signatures.iter().collect();
    order.sort_by(|a, b| a.doc.cmp(&b.doc).then_with(|| a.values.cmp(&b.values)));
    let mut alive = vec![true; order.len()];
    let mut removals = Vec::new();
    for band in 0..BANDS {
        let mut first: HashMap<&[u64], usize> = HashMap::new();
        for (i, sig) in order.iter().enumerate() {
            if !alive[i] {
                continue;
            }
            let Some(key) = sig.band(band) else { continue };
            match first.get(key) {
                Some(&k) => {
                    alive[i] = false;
                    removals.push(Removal {
                        removed: sig.doc.clone(),
                        kept: order[k].doc.clone(),
                        band,
                    });
                }
                None => {
                    first.insert(key, i);
                }
            }
        }
    }
    let kept = order
        .iter()
        .zip(&alive)
        .filter(|(_, &a)| a)
        .map(|(s, _)| s.doc.clone())
        .collect();
    DedupResult { kept, removals }
}

fn write_str<W: Write>(w: &mut W, s: &str) -> io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> io::Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn read_str<R: Read>(r: &mut R) -> io::Result<String> {
    let len = u32::from_le_bytes(read_array(r)?) as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

/// Binary signature file: magic, version, count, then per record the key,
/// a presence byte and 112 little-endian u64 values.
pub fn write_signatures<W: Write>(mut w: W, sigs: &[MinHashSignature]) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION])?;
    w.write_all(&(sigs.len() as u64).to_le_bytes())?;
    for s in sigs {
        write_str(&mut w, &s.doc.snapshot)?;
        write_str(&mut w, &s.doc.warc_path)?;
        w.write_all(&s.doc.record_offset.to_le_bytes())?;
        match &s.values {
            Some(v) => {
                w.write_all(&[1])?;
                for x in v {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
            None => w.write_all(&[0])?,
        }
    }
    Ok(())
}

pub fn read_signatures<R: Read>(mut r: R) -> io::Result<Vec<MinHashSignature>> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    if &read_array::<4, _>(&mut r)? != MAGIC {
        return Err(bad("not a signature file"));
    }
    let [version] = read_array::<1, _>(&mut r)?;
    if version != VERSION {
        return Err(bad(&format!("unsupported signature file version {version}")));
    }
    let n = u64::from_le_bytes(read_array(&mut r)?);
    let mut out = Vec::new();
    for _ in 0..n {
        let doc = DocRef {
            snapshot: read_str(&mut r)?,
            warc_path: read_str(&mut r)?,
            record_offset: u64::from_le_bytes(read_array(&mut r)?),
        };
        let values = match read_array::<1, _>(&mut r)? {
            [0] => None,
            [1] => {
                let mut v = [0u64; HASHES];
                for x in v.iter_mut() {
                    *x = u64::from_le_bytes(read_array(&mut r)?);
                }
                Some(v)
            }
            _ => return Err(bad("bad presence byte")),
        };
        out.push(MinHashSignature { doc, values });
    }
    Ok(out)
}
