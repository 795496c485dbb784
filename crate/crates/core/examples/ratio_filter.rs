//! Token-to-word ratio filtering and partition selection.
//!
//! ```text
//! cargo run --example ratio_filter
//! ```

use corpus_curate::corpus_io::{discover_shards, read_shard, Document, OnError, Partition};
use corpus_curate::quality::{
    apply_ratio_filter, partition_filter, perplexity_summary, token_word_ratio, PartitionPolicy, RatioFilterConfig,
    RatioReport,
};
use corpus_curate::tokenizer::{train_bpe, CharTokenizer, TokenizerTrainConfig};

fn main() -> anyhow::Result<()> {
    // Any token counter works; a character counter makes URL-like strings stand out.
    for text in ["Der Himmel ist blau", "/de/c/trebic-unesco"] {
        println!("{text:?}: {:.1} chars per word", token_word_ratio(text, &CharTokenizer).unwrap_or(f64::NAN));
    }

    let corpus = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus");
    let mut docs: Vec<Document> = Vec::new();
    for shard in discover_shards(&[corpus], None)? {
        docs.extend(read_shard(&shard, OnError::Skip)?.0);
    }
    println!("\nperplexity: {:?}", perplexity_summary(&docs));

    let policy = PartitionPolicy::default();
    let (kept, dropped): (Vec<_>, Vec<_>) = docs.into_iter().partition(|d| partition_filter(d, &policy));
    println!("partition policy keeps {:?}: {} kept, {} dropped", policy.partitions().collect::<Vec<Partition>>(), kept.len(), dropped.len());

    let tok = train_bpe(kept.clone(), &TokenizerTrainConfig { vocab_size: 400, ..Default::default() })?;
    let cfg = RatioFilterConfig::default();
    let mut report = RatioReport::default();
    for doc in kept {
        let outcome = apply_ratio_filter(doc, &cfg, &tok, &mut report);
        for a in outcome.audits {
            println!("  removed {} #{:?} (ratio {:.2}): {}", a.doc_id, a.paragraph_index, a.ratio.unwrap_or(0.0), a.text);
        }
    }
    println!("{report:#?}");
    Ok(())
}
