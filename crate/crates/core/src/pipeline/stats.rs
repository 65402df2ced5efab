use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::archive::ArchiveTally;
use crate::filters::{FilterVerdict, ALNUM_RATIO, CONTENT_LENGTH, HEADING_RATIO, UNIGRAM_ENTROPY};
use crate::pii::PiiCounts;

/// Document counts through one stage.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StageStats {
    pub input: u64,
    pub output: u64,
    /// Removals by reason.
    pub removed: BTreeMap<String, u64>,
}

impl StageStats {
    pub fn removed_total(&self) -> u64 {
        self.removed.values().sum()
    }

    pub fn remove(&mut self, reason: &str) {
        *self.removed.entry(reason.to_string()).or_default() += 1;
    }

    fn merge(&mut self, other: &StageStats) {
        self.input += other.input;
        self.output += other.output;
        merge_counts(&mut self.removed, &other.removed);
    }
}

fn merge_counts(into: &mut BTreeMap<String, u64>, from: &BTreeMap<String, u64>) {
    for (k, v) in from {
        *into.entry(k.clone()).or_default() += v;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Stages {
    pub select: StageStats,
    pub fetch: StageStats,
    pub convert: StageStats,
    pub extract: StageStats,
    pub filter: StageStats,
    pub dedup: StageStats,
    pub scrub: StageStats,
}

impl Stages {
    pub const NAMES: [&'static str; 7] = ["select", "fetch", "convert", "extract", "filter", "dedup", "scrub"];

    pub fn in_order(&self) -> [&StageStats; 7] {
        [
            &self.select,
            &self.fetch,
            &self.convert,
            &self.extract,
            &self.filter,
            &self.dedup,
            &self.scrub,
        ]
    }

    fn merge(&mut self, o: &Stages) {
        self.select.merge(&o.select);
        self.fetch.merge(&o.fetch);
        self.convert.merge(&o.convert);
        self.extract.merge(&o.extract);
        self.filter.merge(&o.filter);
        self.dedup.merge(&o.dedup);
        self.scrub.merge(&o.scrub);
    }
}

/// Which filter measurement a histogram bins, and how.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    /// Powers of two.
    ContentLength,
    /// Width 0.05.
    AlnumRatio,
    /// Width 0.01; infinity gets its own bucket.
    HeadingRatio,
    /// Width 0.5 nats.
    UnigramEntropy,
}

const INF_BUCKET: i64 = i64::MAX;

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::ContentLength,
        Measure::AlnumRatio,
        Measure::HeadingRatio,
        Measure::UnigramEntropy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::ContentLength => CONTENT_LENGTH,
            Measure::AlnumRatio => ALNUM_RATIO,
            Measure::HeadingRatio => HEADING_RATIO,
            Measure::UnigramEntropy => UNIGRAM_ENTROPY,
        }
    }

    pub fn bucket(self, v: f64) -> i64 {
        if v.is_infinite() {
            return INF_BUCKET;
        }
        match self {
            Measure::ContentLength if v < 1.0 => -1,
            Measure::ContentLength => v.log2().floor() as i64,
            Measure::AlnumRatio => ((v * 20.0).floor() as i64).min(19),
            Measure::HeadingRatio => (v * 100.0).floor() as i64,
            Measure::UnigramEntropy => (v * 2.0).floor() as i64,
        }
    }

    /// Half-open `[lo, hi)` range of a bucket.
    pub fn range(self, b: i64) -> (f64, f64) {
        if b == INF_BUCKET {
            return (f64::INFINITY, f64::INFINITY);
        }
        match self {
            Measure::ContentLength if b < 0 => (0.0, 1.0),
            Measure::ContentLength => ((b as f64).exp2(), ((b + 1) as f64).exp2()),
            Measure::AlnumRatio if b == 19 => (0.95, 1.0),
            Measure::AlnumRatio => (b as f64 / 20.0, (b + 1) as f64 / 20.0),
            Measure::HeadingRatio => (b as f64 / 100.0, (b + 1) as f64 / 100.0),
            Measure::UnigramEntropy => (b as f64 / 2.0, (b + 1) as f64 / 2.0),
        }
    }

    fn value(self, v: &FilterVerdict) -> f64 {
        match self {
            Measure::ContentLength => v.content_length as f64,
            Measure::AlnumRatio => v.alnum_ratio,
            Measure::HeadingRatio => v.heading_ratio,
            Measure::UnigramEntropy => v.unigram_entropy,
        }
    }
}

/// Bucket counts of the four filter measurements over documents that
/// reached the filter stage.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FilterHistograms {
    pub content_length: BTreeMap<i64, u64>,
    pub alnum_ratio: BTreeMap<i64, u64>,
    pub heading_ratio: BTreeMap<i64, u64>,
    pub unigram_entropy: BTreeMap<i64, u64>,
}

impl FilterHistograms {
    pub fn get(&self, m: Measure) -> &BTreeMap<i64, u64> {
        match m {
            Measure::ContentLength => &self.content_length,
            Measure::AlnumRatio => &self.alnum_ratio,
            Measure::HeadingRatio => &self.heading_ratio,
            Measure::UnigramEntropy => &self.unigram_entropy,
        }
    }

    fn get_mut(&mut self, m: Measure) -> &mut BTreeMap<i64, u64> {
        match m {
            Measure::ContentLength => &mut self.content_length,
            Measure::AlnumRatio => &mut self.alnum_ratio,
            Measure::HeadingRatio => &mut self.heading_ratio,
            Measure::UnigramEntropy => &mut self.unigram_entropy,
        }
    }

    pub fn add(&mut self, verdict: &FilterVerdict) {
        for m in Measure::ALL {
            *self.get_mut(m).entry(m.bucket(m.value(verdict))).or_default() += 1;
        }
    }

    fn merge(&mut self, o: &FilterHistograms) {
        for m in Measure::ALL {
            for (b, c) in o.get(m) {
                *self.get_mut(m).entry(*b).or_default() += c;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunStats {
    pub snapshot: String,
    pub shards: u64,
    pub documents_in: u64,
    pub documents_out: u64,
    pub stages: Stages,
    /// A document failing several filters counts once per filter.
    pub filter_failures: BTreeMap<String, u64>,
    /// Output documents per language code.
    pub languages: BTreeMap<String, u64>,
    pub dedup_removed: u64,
    pub pii: PiiCounts,
    /// Whitespace tokens in the output text.
    pub tokens: u64,
    pub tokens_by_language: BTreeMap<String, u64>,
    pub archive: ArchiveTally,
    pub histograms: FilterHistograms,
}

impl RunStats {
    /// Adds shard-level counts.
    pub fn merge(&mut self, o: &RunStats) {
        self.shards += o.shards;
        self.documents_in += o.documents_in;
        self.documents_out += o.documents_out;
        self.stages.merge(&o.stages);
        merge_counts(&mut self.filter_failures, &o.filter_failures);
        merge_counts(&mut self.languages, &o.languages);
        merge_counts(&mut self.tokens_by_language, &o.tokens_by_language);
        self.dedup_removed += o.dedup_removed;
        self.pii.emails_replaced += o.pii.emails_replaced;
        self.pii.ips_replaced += o.pii.ips_replaced;
        self.tokens += o.tokens;
        self.archive.merge(&o.archive);
        self.histograms.merge(&o.histograms);
    }

    /// Checks `output = input - removed` at every stage, that each stage
    /// feeds the next, and the end-to-end totals.
    pub fn check_conservation(&self) -> Result<(), String> {
        let stages = self.stages.in_order();
        for (name, s) in Stages::NAMES.iter().zip(stages) {
            if s.output + s.removed_total() != s.input {
                return Err(format!(
                    "{name}: output {} + removed {} != input {}",
                    s.output,
                    s.removed_total(),
                    s.input
                ));
            }
        }
        for i in 1..stages.len() {
            if stages[i].input != stages[i - 1].output {
                return Err(format!(
                    "{} output {} != {} input {}",
                    Stages::NAMES[i - 1],
                    stages[i - 1].output,
                    Stages::NAMES[i],
                    stages[i].input
                ));
            }
        }
        let removed: u64 = stages.iter().map(|s| s.removed_total()).sum();
        if self.documents_in != self.documents_out + removed {
            return Err(format!(
                "documents in {} != out {} + removed {removed}",
                self.documents_in, self.documents_out
            ));
        }
        if self.stages.select.input != self.documents_in || self.stages.scrub.output != self.documents_out {
            return Err("stage totals disagree with document totals".into());
        }
        if self.languages.values().sum::<u64>() != self.documents_out {
            return Err("language counts do not sum to documents out".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub filter: String,
    /// Non-empty buckets in ascending order.
    pub buckets: Vec<Bucket>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageShare {
    pub language: String,
    pub documents: u64,
    pub share: f64,
}

/// Summary of a run, serializable as JSON and printable as text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub snapshot: String,
    pub documents_in: u64,
    pub documents_out: u64,
    /// Sorted by share, largest first; ties by code.
    pub languages: Vec<LanguageShare>,
    pub dominant_language: Option<String>,
    pub filter_failures: BTreeMap<String, u64>,
    pub histograms: Vec<Histogram>,
    pub dedup_removed: u64,
    pub pii: PiiCounts,
    pub tokens: u64,
}

pub fn stats_report(stats: &RunStats) -> StatsReport {
    let total: u64 = stats.languages.values().sum();
    let mut languages: Vec<LanguageShare> = stats
        .languages
        .iter()
        .filter(|(_, &n)| n > 0)
        .map(|(l, &n)| LanguageShare {
            language: l.clone(),
            documents: n,
            share: n as f64 / total as f64,
        })
        .collect();
    languages.sort_by(|a, b| b.documents.cmp(&a.documents).then_with(|| a.language.cmp(&b.language)));
    let histograms = Measure::ALL
        .iter()
        .map(|&m| Histogram {
            filter: m.name().to_string(),
            buckets: stats
                .histograms
                .get(m)
                .iter()
                .map(|(&b, &count)| {
                    let (lo, hi) = m.range(b);
                    Bucket { lo, hi, count }
                })
                .collect(),
        })
        .collect();
    StatsReport {
        snapshot: stats.snapshot.clone(),
        documents_in: stats.documents_in,
        documents_out: stats.documents_out,
        dominant_language: languages.first().map(|l| l.language.clone()),
        languages,
        filter_failures: stats.filter_failures.clone(),
        histograms,
        dedup_removed: stats.dedup_removed,
        pii: stats.pii,
        tokens: stats.tokens,
    }
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "snapshot {}", self.snapshot)?;
        writeln!(f, "documents: {} in, {} out", self.documents_in, self.documents_out)?;
        writeln!(f, "whitespace tokens: {}", self.tokens)?;
        writeln!(f, "near-duplicates removed: {}", self.dedup_removed)?;
        writeln!(
            f,
            "pii replaced: {} emails, {} ip addresses",
            self.pii.emails_replaced, self.pii.ips_replaced
        )?;
        match &self.dominant_language {
            Some(l) => writeln!(f, "dominant language: {l}")?,
            None => writeln!(f, "dominant language: none")?,
        }
        for l in &self.languages {
            writeln!(f, "  {:<6} {:>10} {:>7.2}%", l.language, l.documents, l.share * 100.0)?;
        }
        writeln!(f, "filter failures:")?;
        for (name, n) in &self.filter_failures {
            writeln!(f, "  {name:<16} {n}")?;
        }
        for h in &self.histograms {
            writeln!(f, "histogram {}:", h.filter)?;
            let peak = h.buckets.iter().map(|b| b.count).max().unwrap_or(0);
            for b in &h.buckets {
                let bar = "#".repeat(((b.count * 40).div_ceil(peak.max(1))) as usize);
                writeln!(f, "  [{:>8.2}, {:>8.2}) {:>8} {bar}", b.lo, b.hi, b.count)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buckets_cover_their_values() {
        let samples = [0.0, 0.3, 0.95, 1.0, 7.0, 100.0, 2500.0];
        for m in Measure::ALL {
            // alnum ratio never exceeds 1
            for v in samples.into_iter().filter(|&v| m != Measure::AlnumRatio || v <= 1.0) {
                let (lo, hi) = m.range(m.bucket(v));
                assert!(lo <= v && (v < hi || (v == hi && v == 1.0)), "{m:?} {v} -> [{lo}, {hi})");
            }
        }
        assert_eq!(Measure::HeadingRatio.bucket(f64::INFINITY), INF_BUCKET);
    }

    #[test]
    fn empty_report() {
        let r = stats_report(&RunStats::default());
        assert!(r.languages.is_empty());
        assert_eq!(r.dominant_language, None);
        assert!(r.histograms.iter().all(|h| h.buckets.is_empty()));
        assert!(r.to_string().contains("dominant language: none"));
        RunStats::default().check_conservation().unwrap();
    }
}
