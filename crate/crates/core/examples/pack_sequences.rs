//! Packing documents into fixed-length rows, replaying the data-order log and
//! finding the documents seen between two checkpoints.
//!
//! ```text
//! cargo run --example pack_sequences
//! ```

use corpus_curate::corpus_io::{discover_shards, read_shard, OnError};
use corpus_curate::packing::{checkpoint_window, pack, rechunk, replay, PackConfig};
use corpus_curate::tokenizer::{train_bpe, TokenizerTrainConfig};

fn main() -> anyhow::Result<()> {
    let corpus = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus");
    let mut docs = Vec::new();
    for shard in discover_shards(&[corpus], None)? {
        docs.extend(read_shard(&shard, OnError::Skip)?.0);
    }
    let tok = train_bpe(docs.clone(), &TokenizerTrainConfig { vocab_size: 400, ..Default::default() })?;
    let separator = tok.token_id("</s>").expect("default specials include </s>");

    let cfg = PackConfig { seq_len: 64, separator, shuffle_seed: Some(17) };
    let out = pack(&docs, &tok, &cfg)?;
    let h = &out.log.header;
    println!("{} documents -> {} rows of {} ({} tokens, {} dropped)", h.documents, h.rows, h.seq_len, h.total_tokens, h.dropped_tokens);
    println!("corpus manifest {}", h.manifest_hash);

    let stream = replay(&out.log, &docs, &tok)?;
    let replayed = rechunk(&stream, cfg.seq_len);
    assert!(replayed.iter().copied().eq(out.rows()));
    println!("replay reproduces all {} rows", replayed.len());

    // two rows per step: steps 1..3 cover rows [2, 6)
    let window = checkpoint_window(&out.log, 1, 3, 1, 2)?;
    println!("\ndocuments between step 1 and step 3:");
    for (doc_id, spans) in &window {
        let tokens: u64 = spans.iter().map(|s| s.len).sum();
        println!("  {doc_id}: {} spans, {tokens} tokens", spans.len());
    }

    let mut log = Vec::new();
    out.log.write_jsonl(&mut log)?;
    println!("\nfirst log lines:");
    for line in String::from_utf8(log)?.lines().take(3) {
        println!("  {line}");
    }
    Ok(())
}
