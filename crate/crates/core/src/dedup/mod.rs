//! Paragraph-level exact deduplication backed by a Bloom filter.
//!
//! Paragraphs with fewer than `min_words` words are exempt: they are always
//! kept and never inserted. Every other paragraph is kept only if the filter
//! has not seen its (normalised) text before.
//!
//! In sequential mode the first occurrence of a paragraph always survives.
//! When several threads share one filter, racing first occurrences may both
//! survive, but never both be removed.

mod bloom;

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

pub use bloom::{optimal_params, BloomError, BloomFilter, BloomSizing};

use crate::audit::AuditRecord;
use crate::corpus_io::{split_paragraphs, word_count, Document};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Normalization {
    pub trim: bool,
    pub lowercase: bool,
}

impl Default for Normalization {
    fn default() -> Self {
        Self { trim: true, lowercase: false }
    }
}

impl Normalization {
    pub fn apply<'a>(&self, text: &'a str) -> Cow<'a, str> {
        let t = if self.trim { text.trim() } else { text };
        if self.lowercase {
            Cow::Owned(t.to_lowercase())
        } else {
            Cow::Borrowed(t)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DedupConfig {
    pub min_words: usize,
    pub normalize: Normalization,
    pub n_expected: u64,
    pub p_target: f64,
    pub seed: u64,
    /// Emit documents whose paragraphs were all removed (with empty text) instead of dropping them.
    pub emit_emptied: bool,
}

impl Default for DedupConfig {
    fn default() -> Self {
        Self {
            min_words: 3,
            normalize: Normalization::default(),
            n_expected: 10_000_000,
            p_target: 1e-6,
            seed: 0,
            emit_emptied: true,
        }
    }
}

impl DedupConfig {
    pub fn build_filter(&self) -> Result<BloomFilter, BloomError> {
        BloomFilter::with_seed(self.n_expected, self.p_target, self.seed)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupReport {
    pub documents_seen: u64,
    pub documents_emptied: u64,
    pub documents_dropped: u64,
    pub paragraphs_seen: u64,
    pub paragraphs_removed: u64,
    pub paragraphs_exempt_short: u64,
}

impl DedupReport {
    pub fn merge(&mut self, other: &DedupReport) {
        self.documents_seen += other.documents_seen;
        self.documents_emptied += other.documents_emptied;
        self.documents_dropped += other.documents_dropped;
        self.paragraphs_seen += other.paragraphs_seen;
        self.paragraphs_removed += other.paragraphs_removed;
        self.paragraphs_exempt_short += other.paragraphs_exempt_short;
    }
}

/// Deduplicates one document against `filter`, updating `report` and appending removal audits.
///
/// Returns `None` only when the document was emptied and `cfg.emit_emptied` is off.
pub fn dedup_document(
    mut doc: Document,
    cfg: &DedupConfig,
    filter: &BloomFilter,
    report: &mut DedupReport,
    audits: &mut Vec<AuditRecord>,
) -> Option<Document> {
    report.documents_seen += 1;
    let paragraphs = split_paragraphs(&doc.raw_content);
    let mut kept: Vec<&str> = Vec::with_capacity(paragraphs.len());
    for p in &paragraphs {
        report.paragraphs_seen += 1;
        if word_count(p.text) < cfg.min_words {
            report.paragraphs_exempt_short += 1;
            kept.push(p.text);
            continue;
        }
        let key = cfg.normalize.apply(p.text);
        if filter.test_and_insert(key.as_bytes()) {
            report.paragraphs_removed += 1;
            audits.push(AuditRecord::duplicate(&doc.doc_id, p.index, p.text));
        } else {
            kept.push(p.text);
        }
    }
    if kept.len() == paragraphs.len() {
        return Some(doc);
    }
    let emptied = kept.is_empty();
    doc.raw_content = kept.join("\n");
    if emptied {
        report.documents_emptied += 1;
        doc.emptied = true;
        if !cfg.emit_emptied {
            report.documents_dropped += 1;
            return None;
        }
    }
    Some(doc)
}

/// Sequential dedup over a document stream. Removal audits accumulate and can be drained.
pub struct DedupStream<'f, I> {
    docs: I,
    cfg: DedupConfig,
    filter: &'f BloomFilter,
    report: DedupReport,
    audits: Vec<AuditRecord>,
}

pub fn dedup_stream<I>(docs: I, cfg: DedupConfig, filter: &BloomFilter) -> DedupStream<'_, I::IntoIter>
where
    I: IntoIterator<Item = Document>,
{
    DedupStream { docs: docs.into_iter(), cfg, filter, report: DedupReport::default(), audits: Vec::new() }
}

impl<I> DedupStream<'_, I> {
    pub fn report(&self) -> &DedupReport {
        &self.report
    }

    pub fn take_audits(&mut self) -> Vec<AuditRecord> {
        std::mem::take(&mut self.audits)
    }
}

impl<I: Iterator<Item = Document>> Iterator for DedupStream<'_, I> {
    type Item = Document;

    fn next(&mut self) -> Option<Document> {
        loop {
            let doc = self.docs.next()?;
            if let Some(out) = dedup_document(doc, &self.cfg, self.filter, &mut self.report, &mut self.audits) {
                return Some(out);
            }
        }
    }
}
