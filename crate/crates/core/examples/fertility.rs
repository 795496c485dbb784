//! Comparing tokenizers by fertility and listing their most frequent tokens.
//!
//! ```text
//! cargo run --example fertility
//! ```

use corpus_curate::corpus_io::{discover_shards, read_shard, OnError};
use corpus_curate::tokenizer::{
    fertility, token_frequency, train_bpe, CharTokenizer, FertilityMode, FertilityReport, TokenizerTrainConfig,
    WhitespaceTokenizer,
};

fn main() -> anyhow::Result<()> {
    let corpus = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus");
    let mut docs = Vec::new();
    for shard in discover_shards(&[corpus], None)? {
        docs.extend(read_shard(&shard, OnError::Skip)?.0);
    }
    let small = train_bpe(docs.clone(), &TokenizerTrainConfig { vocab_size: 300, ..Default::default() })?;
    let large = train_bpe(docs.clone(), &TokenizerTrainConfig { vocab_size: 1000, ..Default::default() })?;

    let mut reports = vec![
        fertility(&WhitespaceTokenizer, docs.clone(), "whitespace", "fixtures", FertilityMode::CorpusRatio)?,
        fertility(&CharTokenizer, docs.clone(), "chars", "fixtures", FertilityMode::CorpusRatio)?,
    ];
    for m in [&small, &large] {
        reports.push(fertility(m, docs.clone(), m.name(), "fixtures", FertilityMode::CorpusRatio)?);
        reports.push(fertility(m, docs.clone(), m.name(), "fixtures", FertilityMode::DocumentMean)?);
    }
    FertilityReport::write_csv(&reports, std::io::stdout())?;

    let freq = token_frequency(&large, docs, 10);
    println!("\n{}: {} of {} vocab entries used", freq.tokenizer_id, freq.unique_token_count, freq.vocab_size);
    freq.write_csv(std::io::stdout())?;
    Ok(())
}
