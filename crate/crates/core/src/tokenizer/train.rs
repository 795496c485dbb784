//! Greedy byte-level BPE training with incremental pair counts.
//!
//! The corpus is reduced to distinct pre-tokens with frequencies. Each round
//! picks the most frequent adjacent pair (ties: smallest `(left, right)` marker
//! strings), merges it in every pre-token that contains it and updates only
//! the counts of pairs touched by those pre-tokens. A max-heap with lazy
//! invalidation serves the selection: pair counts only ever fall after they
//! are first created, so a popped entry whose count is stale is re-pushed
//! with the current count.
//!
//! Training stops after `vocab_size - 256 - specials` merges or when no pair
//! occurs at least twice. A pair whose concatenation already exists as a token
//! is never selected, which keeps vocab strings unique.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::alphabet::byte_to_char;
use super::model::ByteBpeModel;
use super::pretokenize::pretokenize;
use super::TokenizerError;
use crate::corpus_io::Document;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizerTrainConfig {
    pub vocab_size: usize,
    pub specials: Vec<String>,
    /// Stop reading the corpus after this many bytes.
    pub max_corpus_bytes: Option<u64>,
}

impl Default for TokenizerTrainConfig {
    fn default() -> Self {
        Self {
            vocab_size: 32_000,
            specials: ["<unk>", "<s>", "</s>"].map(String::from).to_vec(),
            max_corpus_bytes: None,
        }
    }
}

impl TokenizerTrainConfig {
    pub fn merge_budget(&self) -> Result<usize, TokenizerError> {
        let min = 256 + self.specials.len();
        if self.vocab_size < min {
            return Err(TokenizerError::VocabTooSmall { vocab_size: self.vocab_size, min });
        }
        Ok(self.vocab_size - min)
    }
}

/// Distinct pre-tokens with their corpus frequency, sorted by bytes.
pub fn count_words<'a, I>(texts: I, max_bytes: Option<u64>) -> Vec<(Vec<u8>, u64)>
where
    I: IntoIterator<Item = &'a [u8]>,
{
    let mut chunks: Vec<&[u8]> = Vec::new();
    let mut budget = max_bytes.unwrap_or(u64::MAX);
    for t in texts {
        if budget == 0 {
            break;
        }
        let take = (t.len() as u64).min(budget) as usize;
        chunks.push(&t[..take]);
        budget -= take as u64;
    }
    let merged = chunks
        .par_iter()
        .fold(HashMap::<&[u8], u64>::new, |mut acc, text| {
            for w in pretokenize(text) {
                *acc.entry(w).or_default() += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            if a.len() < b.len() {
                return merge_into(b, a);
            }
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        });
    let mut words: Vec<(Vec<u8>, u64)> = merged.into_iter().map(|(k, v)| (k.to_vec(), v)).collect();
    words.sort_unstable();
    words
}

fn merge_into<'a>(mut big: HashMap<&'a [u8], u64>, small: HashMap<&'a [u8], u64>) -> HashMap<&'a [u8], u64> {
    for (k, v) in small {
        *big.entry(k).or_default() += v;
    }
    big
}

struct Candidate {
    count: u64,
    pair: (u32, u32),
    left: Arc<str>,
    right: Arc<str>,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| (&other.left, &other.right).cmp(&(&self.left, &self.right)))
    }
}

/// Learns merges from pre-token frequencies. Merge operands are ids in the
/// canonical layout (`specials.len() + byte` for bytes).
pub fn learn_merges(words: &[(Vec<u8>, u64)], n_specials: usize, budget: usize) -> Vec<(u32, u32)> {
    let s = n_specials as u32;
    let mut tokens: Vec<Arc<str>> = vec![Arc::from(""); n_specials];
    tokens.extend((0..=255u8).map(|b| Arc::from(byte_to_char(b).to_string())));
    let mut known: HashSet<Arc<str>> = tokens[n_specials..].iter().cloned().collect();

    let mut syms: Vec<Vec<u32>> = words.iter().map(|(w, _)| w.iter().map(|&b| s + b as u32).collect()).collect();
    let freq: Vec<u64> = words.iter().map(|&(_, c)| c).collect();

    let mut counts: HashMap<(u32, u32), u64> = HashMap::new();
    let mut occurs: HashMap<(u32, u32), HashSet<usize>> = HashMap::new();
    for (wi, w) in syms.iter().enumerate() {
        for p in w.windows(2) {
            let pair = (p[0], p[1]);
            *counts.entry(pair).or_default() += freq[wi];
            occurs.entry(pair).or_default().insert(wi);
        }
    }
    let candidate = |tokens: &[Arc<str>], pair: (u32, u32), count: u64| Candidate {
        count,
        pair,
        left: tokens[pair.0 as usize].clone(),
        right: tokens[pair.1 as usize].clone(),
    };
    let mut heap: BinaryHeap<Candidate> = counts.iter().map(|(&p, &c)| candidate(&tokens, p, c)).collect();
    let mut banned: HashSet<(u32, u32)> = HashSet::new();
    let mut merges = Vec::with_capacity(budget);

    while merges.len() < budget {
        let Some(top) = heap.pop() else { break };
        let actual = counts.get(&top.pair).copied().unwrap_or(0);
        if actual != top.count {
            if actual > 0 && !banned.contains(&top.pair) {
                heap.push(candidate(&tokens, top.pair, actual));
            }
            continue;
        }
        if actual < 2 {
            break;
        }
        let merged: Arc<str> = Arc::from(format!("{}{}", top.left, top.right));
        if known.contains(&merged) {
            banned.insert(top.pair);
            continue;
        }
        let (a, b) = top.pair;
        let new_id = tokens.len() as u32;
        tokens.push(merged.clone());
        known.insert(merged);
        merges.push((a, b));

        let mut affected: Vec<usize> = occurs.remove(&top.pair).map(|s| s.into_iter().collect()).unwrap_or_default();
        affected.sort_unstable();
        let mut delta: HashMap<(u32, u32), i64> = HashMap::new();
        for wi in affected {
            let w = &syms[wi];
            if !w.windows(2).any(|p| p[0] == a && p[1] == b) {
                continue;
            }
            let f = freq[wi] as i64;
            for p in w.windows(2) {
                *delta.entry((p[0], p[1])).or_default() -= f;
            }
            let mut merged_word = Vec::with_capacity(w.len());
            let mut i = 0;
            while i < w.len() {
                if i + 1 < w.len() && w[i] == a && w[i + 1] == b {
                    merged_word.push(new_id);
                    i += 2;
                } else {
                    merged_word.push(w[i]);
                    i += 1;
                }
            }
            for p in merged_word.windows(2) {
                let pair = (p[0], p[1]);
                *delta.entry(pair).or_default() += f;
                occurs.entry(pair).or_default().insert(wi);
            }
            syms[wi] = merged_word;
        }
        let mut grown: Vec<(u32, u32)> = Vec::new();
        for (pair, d) in delta {
            if d == 0 {
                continue;
            }
            let c = counts.entry(pair).or_default();
            *c = (*c as i64 + d) as u64;
            if *c == 0 {
                counts.remove(&pair);
            } else if d > 0 {
                grown.push(pair);
            }
        }
        for pair in grown {
            if !banned.contains(&pair) {
                heap.push(candidate(&tokens, pair, counts[&pair]));
            }
        }
    }
    merges
}

/// Trains a byte-level BPE model on the documents' raw text.
pub fn train_bpe<I>(corpus: I, cfg: &TokenizerTrainConfig) -> Result<ByteBpeModel, TokenizerError>
where
    I: IntoIterator<Item = Document>,
{
    let texts: Vec<String> = corpus.into_iter().map(|d| d.raw_content).collect();
    train_bpe_texts(texts.iter().map(String::as_str), cfg)
}

pub fn train_bpe_texts<'a, I>(texts: I, cfg: &TokenizerTrainConfig) -> Result<ByteBpeModel, TokenizerError>
where
    I: IntoIterator<Item = &'a str>,
{
    let budget = cfg.merge_budget()?;
    let mut any = false;
    let words = count_words(
        texts.into_iter().inspect(|_| any = true).map(str::as_bytes),
        cfg.max_corpus_bytes,
    );
    if !any {
        return Err(TokenizerError::EmptyCorpus);
    }
    let merges = learn_merges(&words, cfg.specials.len(), budget);
    Ok(ByteBpeModel::from_parts(format!("bpe-{}", cfg.vocab_size), &cfg.specials, merges))
}
