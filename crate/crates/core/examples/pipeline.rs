//! Running the command-line pipeline from code: train a tokenizer, then
//! dedup, filter and count the fixture corpus in one pass.
//!
//! ```text
//! cargo run --example pipeline
//! ```

use clap::Parser;
use corpus_curate::cli::{run, Cli};

fn main() -> anyhow::Result<()> {
    let corpus = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus");
    let out = tempfile::tempdir()?;
    let tok_out = out.path().join("tok");
    let pipe_out = out.path().join("pipeline");

    let train = Cli::parse_from(["curate", "train-tokenizer", "--input", corpus, "--out", path(&tok_out), "--vocab-size", "400"]);
    run(&train).map_err(|f| anyhow::anyhow!("{:#}", f.error()))?;

    let tokenizer = tok_out.join("tokenizer");
    let pipeline = Cli::parse_from([
        "curate", "pipeline", "--input", corpus, "--out", path(&pipe_out), "--tokenizer", path(&tokenizer), "--deterministic",
    ]);
    let outcome = run(&pipeline).map_err(|f| anyhow::anyhow!("{:#}", f.error()))?;
    println!("outputs: {:?}", outcome.outputs);
    println!("{}", serde_json::to_string_pretty(&outcome.counters)?);
    println!("\naudit log:\n{}", std::fs::read_to_string(pipe_out.join("audit.jsonl"))?);
    Ok(())
}

fn path(p: &std::path::Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}
