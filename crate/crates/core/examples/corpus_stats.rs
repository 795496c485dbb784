//! Token histograms, partition totals and top domains, computed per shard and merged.
//!
//! ```text
//! cargo run --example corpus_stats
//! ```

use corpus_curate::corpus_io::{discover_shards, read_shard, OnError};
use corpus_curate::stats::{collect_stats, CorpusStats, DomainCount};
use corpus_curate::tokenizer::WhitespaceTokenizer;

fn main() -> anyhow::Result<()> {
    let corpus = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus");
    let mut merged = CorpusStats::default();
    for shard in discover_shards(&[corpus], None)? {
        let (docs, _) = read_shard(&shard, OnError::Skip)?;
        merged.merge(&collect_stats(docs, &WhitespaceTokenizer, true));
    }

    let report = merged.report(5);
    for p in &report.partitions {
        println!(
            "{:<6} unique {:>2}  duplicate {:>2}  tokens {:>4}  max {:>3}  mean {:.1}",
            p.partition.as_str(),
            p.unique_docs,
            p.duplicate_docs,
            p.total_tokens,
            p.max_doc_tokens,
            p.mean_doc_tokens.unwrap_or(0.0)
        );
    }
    for h in &report.histograms {
        println!("histogram {}/{}: {} docs, mode {:?}", h.partition.as_str(), h.uniqueness.as_str(), h.total(), h.mode());
    }
    println!();
    DomainCount::write_csv(&report.top_domains, std::io::stdout())?;
    Ok(())
}
