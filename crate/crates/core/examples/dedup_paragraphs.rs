//! Paragraph-level deduplication of the fixture corpus.
//!
//! ```text
//! cargo run --example dedup_paragraphs
//! ```

use corpus_curate::corpus_io::{discover_shards, read_shard, OnError};
use corpus_curate::dedup::{dedup_stream, DedupConfig};

fn main() -> anyhow::Result<()> {
    let corpus = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus");
    let cfg = DedupConfig { n_expected: 100_000, p_target: 1e-9, ..DedupConfig::default() };
    let filter = cfg.build_filter()?;
    println!("bloom filter: m = {} bits, k = {}", filter.num_bits(), filter.num_hashes());

    let mut docs = Vec::new();
    for shard in discover_shards(&[corpus], None)? {
        let (shard_docs, skipped) = read_shard(&shard, OnError::Skip)?;
        println!("{} ({}): {} docs, {} bad lines", shard.path.display(), shard.partition, shard_docs.len(), skipped.len());
        docs.extend(shard_docs);
    }

    let mut stream = dedup_stream(docs, cfg, &filter);
    let kept: Vec<_> = stream.by_ref().collect();
    let report = *stream.report();
    println!("\n{report:#?}");
    println!("documents out: {}", kept.len());
    println!("\nremoved paragraphs:");
    for a in stream.take_audits() {
        println!("  {} #{}: {}", a.doc_id, a.paragraph_index.unwrap_or(0), a.text);
    }
    Ok(())
}
