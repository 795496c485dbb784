//! Fertility and token-frequency reports.

use std::collections::HashMap;
use std::io;

use serde::{Deserialize, Serialize};

use super::{Encoder, TokenCounter, TokenizerError};
use crate::corpus_io::{word_count, Document};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FertilityMode {
    /// Σ tokens / Σ words over the whole stream.
    #[default]
    CorpusRatio,
    /// Mean of per-document ratios, over documents with at least one word.
    DocumentMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FertilityReport {
    pub tokenizer_id: String,
    pub sample_id: String,
    pub mode: FertilityMode,
    pub documents: u64,
    pub word_count: u64,
    pub token_count: u64,
    pub fertility: f64,
}

impl FertilityReport {
    pub fn write_csv<W: io::Write>(reports: &[FertilityReport], w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["tokenizer_id", "sample_id", "mode", "documents", "word_count", "token_count", "fertility"])?;
        for r in reports {
            let mode = match r.mode {
                FertilityMode::CorpusRatio => "corpus_ratio",
                FertilityMode::DocumentMean => "document_mean",
            };
            out.write_record([
                r.tokenizer_id.clone(),
                r.sample_id.clone(),
                mode.to_string(),
                r.documents.to_string(),
                r.word_count.to_string(),
                r.token_count.to_string(),
                r.fertility.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn fertility<T, I>(
    tok: &T,
    docs: I,
    tokenizer_id: &str,
    sample_id: &str,
    mode: FertilityMode,
) -> Result<FertilityReport, TokenizerError>
where
    T: TokenCounter + ?Sized,
    I: IntoIterator<Item = Document>,
{
    let (mut documents, mut words, mut tokens) = (0u64, 0u64, 0u64);
    let (mut ratio_sum, mut ratio_docs) = (0f64, 0u64);
    for doc in docs {
        let w = word_count(&doc.raw_content) as u64;
        let t = tok.count_tokens(&doc.raw_content) as u64;
        documents += 1;
        words += w;
        tokens += t;
        if w > 0 {
            ratio_sum += t as f64 / w as f64;
            ratio_docs += 1;
        }
    }
    if words == 0 {
        return Err(TokenizerError::ZeroWords);
    }
    let fertility = match mode {
        FertilityMode::CorpusRatio => tokens as f64 / words as f64,
        FertilityMode::DocumentMean => ratio_sum / ratio_docs as f64,
    };
    Ok(FertilityReport {
        tokenizer_id: tokenizer_id.to_string(),
        sample_id: sample_id.to_string(),
        mode,
        documents,
        word_count: words,
        token_count: tokens,
        fertility,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenFrequency {
    pub rank: usize,
    pub id: u32,
    pub token: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenFrequencyReport {
    pub tokenizer_id: String,
    pub vocab_size: usize,
    pub total_tokens: u64,
    pub unique_token_count: usize,
    pub top: Vec<TokenFrequency>,
}

impl TokenFrequencyReport {
    pub fn write_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["rank", "id", "token", "count"])?;
        for t in &self.top {
            out.write_record([t.rank.to_string(), t.id.to_string(), t.token.clone(), t.count.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Exact token counts; top `k` by count, ties by ascending id.
pub fn token_frequency<E, I>(tok: &E, docs: I, k: usize) -> TokenFrequencyReport
where
    E: Encoder + ?Sized,
    I: IntoIterator<Item = Document>,
{
    let mut counts: HashMap<u32, u64> = HashMap::new();
    for doc in docs {
        for id in tok.encode(&doc.raw_content) {
            *counts.entry(id).or_default() += 1;
        }
    }
    let total_tokens = counts.values().sum();
    let unique_token_count = counts.len();
    let mut ranked: Vec<(u32, u64)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let top = ranked
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (id, count))| TokenFrequency {
            rank: i + 1,
            id,
            token: tok.token_label(id).unwrap_or_default(),
            count,
        })
        .collect();
    TokenFrequencyReport {
        tokenizer_id: tok.tokenizer_id(),
        vocab_size: tok.vocab_size(),
        total_tokens,
        unique_token_count,
        top,
    }
}
