//! Descriptive corpus statistics: per-document token-count histograms split by
//! partition and uniqueness, partition totals and host-level domain counts.
//!
//! Everything accumulates into [`CorpusStats`], which merges associatively so
//! shards can be counted independently and combined.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io;

use serde::{Deserialize, Serialize};

use crate::corpus_io::{Document, Partition};
use crate::hash::content_hash;
use crate::tokenizer::TokenCounter;

pub const UNKNOWN_DOMAIN: &str = "(unknown)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Uniqueness {
    Unique,
    Duplicate,
}

impl Uniqueness {
    pub fn as_str(self) -> &'static str {
        match self {
            Uniqueness::Unique => "unique",
            Uniqueness::Duplicate => "duplicate",
        }
    }
}

/// Marks documents unique or duplicate, either from `dup_flag` or by hashing the full text.
///
/// Recomputation is order-dependent: the first occurrence is unique.
#[derive(Debug, Default)]
pub struct UniquenessTracker {
    recompute: bool,
    seen: HashSet<u128>,
}

impl UniquenessTracker {
    pub fn new(recompute: bool) -> Self {
        Self { recompute, seen: HashSet::new() }
    }

    pub fn classify(&mut self, doc: &Document) -> Uniqueness {
        let dup = if self.recompute {
            !self.seen.insert(content_hash(doc.raw_content.as_bytes(), 0))
        } else {
            doc.dup_flag
        };
        if dup {
            Uniqueness::Duplicate
        } else {
            Uniqueness::Unique
        }
    }
}

pub fn doc_uniqueness<I>(docs: I, recompute: bool) -> impl Iterator<Item = (Document, Uniqueness)>
where
    I: IntoIterator<Item = Document>,
{
    let mut tracker = UniquenessTracker::new(recompute);
    docs.into_iter().map(move |d| {
        let u = tracker.classify(&d);
        (d, u)
    })
}

/// Host of a URL: scheme, user info, port, path, query and fragment stripped; lowercased.
pub fn host_of(url: &str) -> Option<String> {
    let rest = url.trim();
    let rest = match rest.find("://") {
        Some(i) => &rest[i + 3..],
        None => rest.strip_prefix("//").unwrap_or(rest),
    };
    let authority = rest.split(['/', '?', '#']).next().unwrap_or("");
    let authority = authority.rsplit_once('@').map_or(authority, |(_, h)| h);
    let host = if let Some(v6) = authority.strip_prefix('[') {
        v6.split(']').next().unwrap_or("")
    } else {
        match authority.rsplit_once(':') {
            Some((h, port)) if port.chars().all(|c| c.is_ascii_digit()) => h,
            _ => authority,
        }
    };
    let host = host.trim_end_matches('.').to_lowercase();
    (!host.is_empty()).then_some(host)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionStats {
    pub unique_docs: u64,
    pub duplicate_docs: u64,
    pub total_tokens: u64,
    pub max_doc_tokens: u64,
}

impl PartitionStats {
    pub fn documents(&self) -> u64 {
        self.unique_docs + self.duplicate_docs
    }

    pub fn mean_doc_tokens(&self) -> Option<f64> {
        let n = self.documents();
        (n > 0).then(|| self.total_tokens as f64 / n as f64)
    }

    fn merge(&mut self, o: &PartitionStats) {
        self.unique_docs += o.unique_docs;
        self.duplicate_docs += o.duplicate_docs;
        self.total_tokens += o.total_tokens;
        self.max_doc_tokens = self.max_doc_tokens.max(o.max_doc_tokens);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenHistogram {
    pub partition: Partition,
    pub uniqueness: Uniqueness,
    /// token count → number of documents
    pub bins: BTreeMap<u64, u64>,
}

impl TokenHistogram {
    pub fn total(&self) -> u64 {
        self.bins.values().sum()
    }

    /// Most frequent token count (smallest on ties).
    pub fn mode(&self) -> Option<(u64, u64)> {
        self.bins.iter().map(|(&b, &c)| (b, c)).max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["bin", "count"])?;
        for (b, c) in &self.bins {
            out.write_record([b.to_string(), c.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainCount {
    pub domain: String,
    pub head: u64,
    pub middle: u64,
    pub tail: u64,
    pub total: u64,
}

impl DomainCount {
    pub fn write_csv<W: io::Write>(rows: &[DomainCount], w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["rank", "domain", "head", "middle", "total"])?;
        for (i, d) in rows.iter().enumerate() {
            out.write_record([
                (i + 1).to_string(),
                d.domain.clone(),
                d.head.to_string(),
                d.middle.to_string(),
                d.total.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    documents: u64,
    histograms: BTreeMap<(Partition, Uniqueness), BTreeMap<u64, u64>>,
    partitions: BTreeMap<Partition, PartitionStats>,
    domains: HashMap<String, [u64; 3]>,
}

fn pidx(p: Partition) -> usize {
    match p {
        Partition::Head => 0,
        Partition::Middle => 1,
        Partition::Tail => 2,
    }
}

impl CorpusStats {
    pub fn observe(&mut self, doc: &Document, uniq: Uniqueness, tokens: u64) {
        self.documents += 1;
        *self.histograms.entry((doc.partition, uniq)).or_default().entry(tokens).or_default() += 1;
        let ps = self.partitions.entry(doc.partition).or_default();
        match uniq {
            Uniqueness::Unique => ps.unique_docs += 1,
            Uniqueness::Duplicate => ps.duplicate_docs += 1,
        }
        ps.total_tokens += tokens;
        ps.max_doc_tokens = ps.max_doc_tokens.max(tokens);
        let domain = doc.url.as_deref().and_then(host_of).unwrap_or_else(|| UNKNOWN_DOMAIN.to_string());
        self.domains.entry(domain).or_default()[pidx(doc.partition)] += 1;
    }

    pub fn merge(&mut self, other: &CorpusStats) {
        self.documents += other.documents;
        for (k, bins) in &other.histograms {
            let mine = self.histograms.entry(*k).or_default();
            for (b, c) in bins {
                *mine.entry(*b).or_default() += c;
            }
        }
        for (p, s) in &other.partitions {
            self.partitions.entry(*p).or_default().merge(s);
        }
        for (d, c) in &other.domains {
            let mine = self.domains.entry(d.clone()).or_default();
            for i in 0..3 {
                mine[i] += c[i];
            }
        }
    }

    pub fn documents(&self) -> u64 {
        self.documents
    }

    pub fn partition(&self, p: Partition) -> PartitionStats {
        self.partitions.get(&p).copied().unwrap_or_default()
    }

    pub fn histograms(&self) -> Vec<TokenHistogram> {
        self.histograms
            .iter()
            .map(|(&(partition, uniqueness), bins)| TokenHistogram { partition, uniqueness, bins: bins.clone() })
            .collect()
    }

    /// Top `k` hosts by total, ties by host ascending.
    pub fn top_domains(&self, k: usize) -> Vec<DomainCount> {
        let mut rows: Vec<DomainCount> = self
            .domains
            .iter()
            .map(|(d, c)| DomainCount {
                domain: d.clone(),
                head: c[0],
                middle: c[1],
                tail: c[2],
                total: c.iter().sum(),
            })
            .collect();
        rows.sort_unstable_by(|a, b| b.total.cmp(&a.total).then_with(|| a.domain.cmp(&b.domain)));
        rows.truncate(k);
        rows
    }

    pub fn report(&self, top_k: usize) -> StatsReport {
        StatsReport {
            documents: self.documents,
            partitions: self
                .partitions
                .iter()
                .map(|(&partition, s)| PartitionSummary {
                    partition,
                    unique_docs: s.unique_docs,
                    duplicate_docs: s.duplicate_docs,
                    total_tokens: s.total_tokens,
                    max_doc_tokens: s.max_doc_tokens,
                    mean_doc_tokens: s.mean_doc_tokens(),
                })
                .collect(),
            histograms: self.histograms(),
            top_domains: self.top_domains(top_k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub partition: Partition,
    pub unique_docs: u64,
    pub duplicate_docs: u64,
    pub total_tokens: u64,
    pub max_doc_tokens: u64,
    pub mean_doc_tokens: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub documents: u64,
    pub partitions: Vec<PartitionSummary>,
    pub histograms: Vec<TokenHistogram>,
    pub top_domains: Vec<DomainCount>,
}

/// Accumulates statistics over a stream; uniqueness from `dup_flag` unless `recompute`.
pub fn collect_stats<T, I>(docs: I, tok: &T, recompute: bool) -> CorpusStats
where
    T: TokenCounter + ?Sized,
    I: IntoIterator<Item = Document>,
{
    let mut stats = CorpusStats::default();
    for (doc, u) in doc_uniqueness(docs, recompute) {
        stats.observe(&doc, u, tok.count_tokens(&doc.raw_content) as u64);
    }
    stats
}

pub fn token_histogram<T, I>(docs: I, tok: &T) -> Vec<TokenHistogram>
where
    T: TokenCounter + ?Sized,
    I: IntoIterator<Item = Document>,
{
    collect_stats(docs, tok, false).histograms()
}

pub fn domain_counts<I: IntoIterator<Item = Document>>(docs: I, k: usize) -> Vec<DomainCount> {
    let mut stats = CorpusStats::default();
    for d in docs {
        stats.observe(&d, Uniqueness::Unique, 0);
    }
    stats.top_domains(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::WhitespaceTokenizer;

    #[test]
    fn hosts() {
        assert_eq!(host_of("https://de.wikipedia.org/wiki/X").as_deref(), Some("de.wikipedia.org"));
        assert_eq!(host_of("HTTP://WWW.Welt.DE:8080/a?b#c").as_deref(), Some("www.welt.de"));
        assert_eq!(host_of("user:pw@example.com/x").as_deref(), Some("example.com"));
        assert_eq!(host_of("http://[::1]:80/").as_deref(), Some("::1"));
        assert_eq!(host_of("https:///path"), None);
        assert_eq!(host_of(""), None);
    }

    #[test]
    fn recomputed_uniqueness() {
        let docs: Vec<_> = ["a", "a", "b", "a"].iter().enumerate().map(|(i, t)| Document::new(i.to_string(), *t, Partition::Head)).collect();
        let u: Vec<_> = doc_uniqueness(docs.clone(), true).map(|(_, u)| u).collect();
        assert_eq!(u, vec![Uniqueness::Unique, Uniqueness::Duplicate, Uniqueness::Unique, Uniqueness::Duplicate]);
        let u: Vec<_> = doc_uniqueness(docs, false).map(|(_, u)| u).collect();
        assert!(u.iter().all(|&u| u == Uniqueness::Unique));
    }

    #[test]
    fn nine_token_document() {
        let doc = Document::new("d", "one two three four five six seven eight nine", Partition::Head);
        let h = token_histogram(vec![doc], &WhitespaceTokenizer);
        assert_eq!(h.len(), 1);
        assert_eq!(h[0].bins.get(&9), Some(&1));
        assert_eq!(h[0].mode(), Some((9, 1)));
    }

    #[test]
    fn domains_and_unknown() {
        let docs = vec![
            Document::new("1", "x", Partition::Head).with_url("https://de.wikipedia.org/wiki/A"),
            Document::new("2", "x", Partition::Middle).with_url("https://de.wikipedia.org/wiki/B"),
            Document::new("3", "x", Partition::Middle).with_url("https://www.welt.de/"),
            Document::new("4", "x", Partition::Head),
        ];
        let top = domain_counts(docs, 2);
        assert_eq!(top[0], DomainCount { domain: "de.wikipedia.org".into(), head: 1, middle: 1, tail: 0, total: 2 });
        assert_eq!(top[1].domain, UNKNOWN_DOMAIN);
        assert!(domain_counts(Vec::new(), 20).is_empty());
    }

    #[test]
    fn partition_means() {
        let mut s = CorpusStats::default();
        let d = Document::new("1", "x", Partition::Head);
        s.observe(&d, Uniqueness::Unique, 10);
        s.observe(&d, Uniqueness::Duplicate, 30);
        let p = s.partition(Partition::Head);
        assert_eq!(p.mean_doc_tokens(), Some(20.0));
        assert_eq!(p.max_doc_tokens, 30);
        assert_eq!(s.partition(Partition::Tail).mean_doc_tokens(), None);
    }
}
