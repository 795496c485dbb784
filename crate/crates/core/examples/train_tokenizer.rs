//! Training a byte-level BPE tokenizer and using it to encode and decode text.
//!
//! ```text
//! cargo run --example train_tokenizer [-- OUTPUT_DIR]
//! ```

use corpus_curate::corpus_io::{discover_shards, read_shard, OnError};
use corpus_curate::tokenizer::{train_bpe, ByteBpeModel, Encoder, TokenizerTrainConfig};

fn main() -> anyhow::Result<()> {
    let corpus = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus");
    let mut docs = Vec::new();
    for shard in discover_shards(&[corpus], None)? {
        docs.extend(read_shard(&shard, OnError::Skip)?.0);
    }

    let cfg = TokenizerTrainConfig { vocab_size: 512, ..TokenizerTrainConfig::default() };
    let model = train_bpe(docs, &cfg)?;
    println!("vocab {} = {} specials + 256 bytes + {} merges", model.vocab_size(), model.specials().count(), model.num_merges());
    for (i, (l, r)) in model.merges().take(10).enumerate() {
        println!("  merge {i:>2}: {l:?} + {r:?}");
    }

    let text = "Die Nutzung der Kontaktdaten ist nicht gestattet.";
    let ids = model.encode(text);
    let labels: Vec<String> = ids.iter().filter_map(|&id| model.token_label(id)).collect();
    println!("\n{text:?}\n  -> {} tokens: {labels:?}", ids.len());
    assert_eq!(model.decode(&ids)?, text.as_bytes());

    let dir = match std::env::args().nth(1) {
        Some(d) => std::path::PathBuf::from(d),
        None => std::env::temp_dir().join("curate-example-tokenizer"),
    };
    std::fs::create_dir_all(&dir)?;
    model.save(&dir)?;
    let reloaded = ByteBpeModel::load(&dir)?;
    assert_eq!(reloaded.encode(text), ids);
    println!("\nsaved vocab.json and merges.txt to {}", dir.display());
    Ok(())
}
