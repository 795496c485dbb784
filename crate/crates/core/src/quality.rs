//! Partition selection, the token-to-word ratio filter and perplexity summaries.
//!
//! A paragraph is removed when its token count exceeds `threshold` times its
//! word count. A ratio exactly at the threshold is kept, and a paragraph with
//! no words has no ratio and is kept (and noted in the outcome).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::AuditRecord;
use crate::corpus_io::{split_paragraphs, word_count, Document, Partition};
use crate::tokenizer::TokenCounter;

#[derive(Debug, Error, PartialEq)]
pub enum FilterError {
    #[error("ratio threshold must be positive and finite, got {0}")]
    BadThreshold(f64),
    #[error("partition policy must keep at least one partition")]
    EmptyPolicy,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    #[default]
    Paragraph,
    Document,
}

impl std::str::FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "paragraph" => Ok(Granularity::Paragraph),
            "document" => Ok(Granularity::Document),
            other => Err(format!("unknown granularity {other:?} (expected paragraph or document)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioFilterConfig {
    pub threshold: f64,
    pub granularity: Granularity,
}

impl Default for RatioFilterConfig {
    fn default() -> Self {
        Self { threshold: 8.0, granularity: Granularity::Paragraph }
    }
}

impl RatioFilterConfig {
    pub fn new(threshold: f64) -> Result<Self, FilterError> {
        if !(threshold.is_finite() && threshold > 0.0) {
            return Err(FilterError::BadThreshold(threshold));
        }
        Ok(Self { threshold, ..Self::default() })
    }
}

/// `tokens / words`, or `None` when the text has no words.
pub fn token_word_ratio<T: TokenCounter + ?Sized>(text: &str, tok: &T) -> Option<f64> {
    match word_count(text) {
        0 => None,
        w => Some(tok.count_tokens(text) as f64 / w as f64),
    }
}

/// Keep predicate: `tokens <= threshold * words`, always true for zero words.
pub fn within_ratio(tokens: usize, words: usize, threshold: f64) -> bool {
    words == 0 || tokens as f64 <= threshold * words as f64
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioReport {
    pub documents_seen: u64,
    pub documents_removed: u64,
    pub paragraphs_seen: u64,
    pub paragraphs_removed: u64,
    pub paragraphs_undefined: u64,
}

impl RatioReport {
    pub fn merge(&mut self, o: &RatioReport) {
        self.documents_seen += o.documents_seen;
        self.documents_removed += o.documents_removed;
        self.paragraphs_seen += o.paragraphs_seen;
        self.paragraphs_removed += o.paragraphs_removed;
        self.paragraphs_undefined += o.paragraphs_undefined;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioOutcome {
    /// `None` only in document mode when the whole document exceeded the threshold.
    pub doc: Option<Document>,
    pub audits: Vec<AuditRecord>,
    /// Paragraph indices kept because they have no words.
    pub undefined: Vec<usize>,
}

/// Applies the ratio filter to one document and tallies into `report`.
pub fn apply_ratio_filter<T: TokenCounter + ?Sized>(
    mut doc: Document,
    cfg: &RatioFilterConfig,
    tok: &T,
    report: &mut RatioReport,
) -> RatioOutcome {
    report.documents_seen += 1;
    let mut audits = Vec::new();
    let mut undefined = Vec::new();
    let paragraphs = split_paragraphs(&doc.raw_content);
    report.paragraphs_seen += paragraphs.len() as u64;

    if cfg.granularity == Granularity::Document {
        let words = word_count(&doc.raw_content);
        let tokens = tok.count_tokens(&doc.raw_content);
        if words == 0 {
            report.paragraphs_undefined += paragraphs.len() as u64;
            undefined.extend(paragraphs.iter().map(|p| p.index));
        } else if !within_ratio(tokens, words, cfg.threshold) {
            report.documents_removed += 1;
            report.paragraphs_removed += paragraphs.len() as u64;
            audits.push(AuditRecord::ratio(&doc.doc_id, None, tokens as f64 / words as f64, &doc.raw_content));
            return RatioOutcome { doc: None, audits, undefined };
        }
        return RatioOutcome { doc: Some(doc), audits, undefined };
    }

    let mut kept = Vec::with_capacity(paragraphs.len());
    for p in &paragraphs {
        let words = word_count(p.text);
        if words == 0 {
            report.paragraphs_undefined += 1;
            undefined.push(p.index);
            kept.push(p.text);
            continue;
        }
        let tokens = tok.count_tokens(p.text);
        if within_ratio(tokens, words, cfg.threshold) {
            kept.push(p.text);
        } else {
            report.paragraphs_removed += 1;
            audits.push(AuditRecord::ratio(&doc.doc_id, Some(p.index), tokens as f64 / words as f64, p.text));
        }
    }
    if kept.len() != paragraphs.len() {
        doc.raw_content = kept.join("\n");
    }
    RatioOutcome { doc: Some(doc), audits, undefined }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionPolicy {
    keep: BTreeSet<Partition>,
}

impl Default for PartitionPolicy {
    fn default() -> Self {
        Self { keep: [Partition::Head, Partition::Middle].into_iter().collect() }
    }
}

impl PartitionPolicy {
    pub fn new(keep: impl IntoIterator<Item = Partition>) -> Result<Self, FilterError> {
        let keep: BTreeSet<_> = keep.into_iter().collect();
        if keep.is_empty() {
            return Err(FilterError::EmptyPolicy);
        }
        Ok(Self { keep })
    }

    /// Parses a comma-separated list such as `head,middle`.
    pub fn parse(list: &str) -> Result<Self, String> {
        let parts = list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Partition>, _>>()?;
        Self::new(parts).map_err(|e| e.to_string())
    }

    pub fn keeps(&self, p: Partition) -> bool {
        self.keep.contains(&p)
    }

    pub fn partitions(&self) -> impl Iterator<Item = Partition> + '_ {
        self.keep.iter().copied()
    }
}

pub fn partition_filter(doc: &Document, policy: &PartitionPolicy) -> bool {
    policy.keeps(doc.partition)
}

/// Perplexity distribution over documents that carry the signal.
///
/// Deciles use the nearest-rank rule: the `q`-th decile is the value at
/// 1-based rank `ceil(q * n / 10)` of the sorted values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerplexitySummary {
    pub count: u64,
    pub count_missing: u64,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub deciles: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct PerplexityAccumulator {
    values: Vec<f64>,
    missing: u64,
}

impl PerplexityAccumulator {
    pub fn observe(&mut self, doc: &Document) {
        match doc.quality.ccnet_perplexity {
            Some(v) => self.values.push(v),
            None => self.missing += 1,
        }
    }

    pub fn merge(&mut self, other: PerplexityAccumulator) {
        self.values.extend(other.values);
        self.missing += other.missing;
    }

    pub fn summary(&self) -> PerplexitySummary {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let mean = (n > 0).then(|| v.iter().sum::<f64>() / n as f64);
        let deciles = if n == 0 {
            Vec::new()
        } else {
            (1..10).map(|q| v[((q * n).div_ceil(10)).max(1) - 1]).collect()
        };
        PerplexitySummary {
            count: n as u64,
            count_missing: self.missing,
            mean,
            min: v.first().copied(),
            max: v.last().copied(),
            deciles,
        }
    }
}

pub fn perplexity_summary<'a, I: IntoIterator<Item = &'a Document>>(docs: I) -> PerplexitySummary {
    let mut acc = PerplexityAccumulator::default();
    for d in docs {
        acc.observe(d);
    }
    acc.summary()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::WhitespaceTokenizer;

    fn counter(map: &'static [(&'static str, usize)]) -> impl Fn(&str) -> usize {
        move |t: &str| map.iter().find(|(k, _)| *k == t).map(|&(_, v)| v).unwrap_or_else(|| word_count(t))
    }

    const PAPER_COUNTS: &[(&str, usize)] = &[("Der Himmel ist blau", 4), ("/de/c/trebic-unesco", 11)];

    #[test]
    fn ratio_fixed_points() {
        let tok = counter(PAPER_COUNTS);
        assert_eq!(token_word_ratio("Der Himmel ist blau", &tok), Some(1.0));
        assert_eq!(token_word_ratio("/de/c/trebic-unesco", &tok), Some(11.0));
        assert_eq!(token_word_ratio("   ", &tok), None);
    }

    #[test]
    fn filters_the_url_paragraph() {
        let tok = counter(PAPER_COUNTS);
        let doc = Document::new("d", "Der Himmel ist blau\n/de/c/trebic-unesco", Partition::Head);
        let mut report = RatioReport::default();
        let out = apply_ratio_filter(doc, &RatioFilterConfig::default(), &tok, &mut report);
        assert_eq!(out.doc.unwrap().raw_content, "Der Himmel ist blau");
        assert_eq!(out.audits.len(), 1);
        assert_eq!(out.audits[0].paragraph_index, Some(1));
        assert_eq!(out.audits[0].ratio, Some(11.0));
        assert_eq!(report.paragraphs_removed, 1);
    }

    #[test]
    fn threshold_boundary_is_kept() {
        assert!(within_ratio(8, 1, 8.0));
        assert!(!within_ratio(9, 1, 8.0));
        assert!(within_ratio(16, 2, 8.0));
        assert!(within_ratio(100, 0, 8.0));
    }

    #[test]
    fn unchanged_and_undefined() {
        let doc = Document::new("d", "a b\n \t \nc d e", Partition::Head);
        let mut report = RatioReport::default();
        let out = apply_ratio_filter(doc.clone(), &RatioFilterConfig::default(), &WhitespaceTokenizer, &mut report);
        assert_eq!(out.doc.as_ref(), Some(&doc));
        assert!(out.audits.is_empty());
        assert_eq!(out.undefined, vec![1]);
        assert_eq!(report.paragraphs_undefined, 1);
    }

    #[test]
    fn document_granularity() {
        let tok = counter(PAPER_COUNTS);
        let cfg = RatioFilterConfig { granularity: Granularity::Document, ..Default::default() };
        let mut report = RatioReport::default();
        let doc = Document::new("d", "/de/c/trebic-unesco", Partition::Head);
        let out = apply_ratio_filter(doc, &cfg, &tok, &mut report);
        assert!(out.doc.is_none());
        assert_eq!(out.audits[0].paragraph_index, None);
        assert_eq!(report.documents_removed, 1);
    }

    #[test]
    fn bad_threshold() {
        assert_eq!(RatioFilterConfig::new(0.0), Err(FilterError::BadThreshold(0.0)));
        assert!(RatioFilterConfig::new(f64::INFINITY).is_err());
    }

    #[test]
    fn partitions() {
        let policy = PartitionPolicy::default();
        let head = Document::new("h", "x", Partition::Head);
        let tail = Document::new("t", "x", Partition::Tail);
        assert!(partition_filter(&head, &policy));
        assert!(!partition_filter(&tail, &policy));
        let tail_only = PartitionPolicy::parse("tail").unwrap();
        assert!(partition_filter(&tail, &tail_only));
        assert_eq!(PartitionPolicy::new([]), Err(FilterError::EmptyPolicy));
        assert!(PartitionPolicy::parse("head,bogus").is_err());
    }

    #[test]
    fn perplexity_singleton_and_missing() {
        let docs = vec![
            Document::new("a", "x", Partition::Head).with_perplexity(10.0),
            Document::new("b", "x", Partition::Head),
        ];
        let s = perplexity_summary(&docs);
        assert_eq!((s.mean, s.min, s.max), (Some(10.0), Some(10.0), Some(10.0)));
        assert_eq!(s.count_missing, 1);
        assert_eq!(s.deciles, vec![10.0; 9]);
        let empty = perplexity_summary(&[]);
        assert_eq!(empty.mean, None);
    }

    #[test]
    fn guitar_tab_below_snapshot_mean() {
        // Only the relation is checked: 41.2 sits below a snapshot mean of 206.35.
        let mut docs = vec![Document::new("tab", "x", Partition::Head).with_perplexity(41.2)];
        docs.push(Document::new("other", "x", Partition::Head).with_perplexity(2.0 * 206.35 - 41.2));
        let s = perplexity_summary(&docs);
        assert!((s.mean.unwrap() - 206.35).abs() < 1e-9);
        assert!(41.2 < s.mean.unwrap());
    }
}
