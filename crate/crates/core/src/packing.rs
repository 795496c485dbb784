//! Packing tokenised documents into fixed-length training rows, with an exact
//! log of which document span landed in which row.
//!
//! Each document is encoded, followed by one separator id, and appended to a
//! single token stream that is cut into rows of `seq_len`. The trailing
//! partial row is dropped and its size reported. Document order is the input
//! order, or a seeded permutation of it.
//!
//! Packed shard files hold at most [`ROWS_PER_SHARD`] rows: magic `LLPK`,
//! version `u32`, `seq_len: u32`, `rows: u32`, then `rows * seq_len` `u32`
//! ids, all little-endian. The log is JSON Lines: a header object on the first
//! line, one span entry per following line.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, BufRead, Read, Write};

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus_io::Document;
use crate::hash::ManifestHasher;
use crate::tokenizer::Encoder;

pub const ROWS_PER_SHARD: usize = 1 << 14;
const MAGIC: &[u8; 4] = b"LLPK";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PackError {
    #[error("invalid pack config: {0}")]
    Config(String),
    #[error("corpus manifest {actual} does not match log manifest {expected}")]
    ManifestMismatch { expected: String, actual: String },
    #[error("log entry {index} refers to document {doc_id:?}, which is not in the corpus at that position")]
    MissingDocument { index: usize, doc_id: String },
    #[error("window [{lo}, {hi}) lies outside the log's {rows} rows")]
    OutOfRange { lo: u64, hi: u64, rows: u64 },
    #[error("malformed packed data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackConfig {
    pub seq_len: usize,
    pub separator: u32,
    pub shuffle_seed: Option<u64>,
}

impl Default for PackConfig {
    fn default() -> Self {
        Self { seq_len: 2048, separator: 2, shuffle_seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedShard {
    pub ordinal: u32,
    pub seq_len: usize,
    tokens: Vec<u32>,
}

impl PackedShard {
    pub fn new(ordinal: u32, seq_len: usize, tokens: Vec<u32>) -> Result<Self, PackError> {
        if seq_len == 0 || !tokens.len().is_multiple_of(seq_len) {
            return Err(PackError::Format(format!("{} tokens is not a whole number of {seq_len}-rows", tokens.len())));
        }
        Ok(Self { ordinal, seq_len, tokens })
    }

    pub fn num_rows(&self) -> usize {
        self.tokens.len() / self.seq_len
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.tokens.chunks_exact(self.seq_len)
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.seq_len as u32).to_le_bytes())?;
        w.write_all(&(self.num_rows() as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.tokens.len() * 4);
        for t in &self.tokens {
            buf.extend_from_slice(&t.to_le_bytes());
        }
        w.write_all(&buf)?;
        w.flush()
    }

    pub fn read_from<R: Read>(mut r: R, ordinal: u32) -> Result<Self, PackError> {
        let mut head = [0u8; 16];
        r.read_exact(&mut head)?;
        if &head[..4] != MAGIC {
            return Err(PackError::Format("bad magic".into()));
        }
        let word = |i: usize| u32::from_le_bytes(head[i..i + 4].try_into().unwrap());
        if word(4) != VERSION {
            return Err(PackError::Format(format!("unsupported version {}", word(4))));
        }
        let (seq_len, rows) = (word(8) as usize, word(12) as usize);
        let mut bytes = vec![0u8; seq_len * rows * 4];
        r.read_exact(&mut bytes)?;
        let tokens = bytes.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
        Self::new(ordinal, seq_len, tokens)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    /// Global row index.
    pub seq: u64,
    /// Position of the document in the input corpus (before shuffling).
    pub doc_index: u64,
    pub doc_id: String,
    /// Offset of the span within the document's tokens (separator included at the end).
    pub offset: u64,
    pub len: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogHeader {
    pub seed: Option<u64>,
    pub seq_len: usize,
    pub separator: u32,
    pub tokenizer_id: String,
    pub manifest_hash: String,
    pub documents: u64,
    pub rows: u64,
    pub total_tokens: u64,
    pub dropped_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataOrderLog {
    pub header: LogHeader,
    pub entries: Vec<LogEntry>,
}

impl DataOrderLog {
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), PackError> {
        serde_json::to_writer(&mut w, &self.header)?;
        w.write_all(b"\n")?;
        for e in &self.entries {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, PackError> {
        let mut lines = r.lines();
        let header = match lines.next() {
            Some(l) => serde_json::from_str(&l?)?,
            None => return Err(PackError::Format("empty log".into())),
        };
        let mut entries = Vec::new();
        for l in lines {
            let l = l?;
            if !l.trim().is_empty() {
                entries.push(serde_json::from_str(&l)?);
            }
        }
        Ok(Self { header, entries })
    }
}

#[derive(Debug, Clone)]
pub struct PackOutput {
    pub shards: Vec<PackedShard>,
    pub log: DataOrderLog,
}

impl PackOutput {
    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.shards.iter().flat_map(PackedShard::rows)
    }
}

/// Fingerprint of the corpus: doc ids and contents in input order.
pub fn corpus_manifest_hash(docs: &[Document]) -> String {
    let mut h = ManifestHasher::new();
    for d in docs {
        h.field(d.doc_id.as_bytes()).field(d.raw_content.as_bytes());
    }
    h.finish_hex()
}

/// Order in which documents enter the stream.
pub fn document_order(n: usize, seed: Option<u64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if let Some(seed) = seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    order
}

fn tokens_with_separator<E: Encoder + ?Sized>(tok: &E, doc: &Document, sep: u32) -> Vec<u32> {
    let mut t = tok.encode(&doc.raw_content);
    t.push(sep);
    t
}

pub fn pack<E>(docs: &[Document], tok: &E, cfg: &PackConfig) -> Result<PackOutput, PackError>
where
    E: Encoder + Sync + ?Sized,
{
    if cfg.seq_len < 2 || cfg.seq_len > u32::MAX as usize {
        return Err(PackError::Config(format!("seq_len must be at least 2, got {}", cfg.seq_len)));
    }
    if cfg.separator as usize >= tok.vocab_size() {
        return Err(PackError::Config(format!(
            "separator id {} outside vocab of size {}",
            cfg.separator,
            tok.vocab_size()
        )));
    }
    let order = document_order(docs.len(), cfg.shuffle_seed);
    let encoded: Vec<Vec<u32>> =
        order.par_iter().map(|&i| tokens_with_separator(tok, &docs[i], cfg.separator)).collect();

    let l = cfg.seq_len;
    let total: usize = encoded.iter().map(Vec::len).sum();
    let full_rows = total / l;
    let kept = full_rows * l;
    let mut stream = Vec::with_capacity(kept);
    let mut entries = Vec::new();
    'docs: for (&di, toks) in order.iter().zip(&encoded) {
        let mut off = 0;
        while off < toks.len() {
            let pos = stream.len();
            if pos == kept {
                break 'docs;
            }
            let take = (l - pos % l).min(toks.len() - off).min(kept - pos);
            entries.push(LogEntry {
                seq: (pos / l) as u64,
                doc_index: di as u64,
                doc_id: docs[di].doc_id.clone(),
                offset: off as u64,
                len: take as u64,
            });
            stream.extend_from_slice(&toks[off..off + take]);
            off += take;
        }
    }
    let shards = stream
        .chunks(ROWS_PER_SHARD * l)
        .enumerate()
        .map(|(i, c)| PackedShard::new(i as u32, l, c.to_vec()))
        .collect::<Result<Vec<_>, _>>()?;
    let header = LogHeader {
        seed: cfg.shuffle_seed,
        seq_len: l,
        separator: cfg.separator,
        tokenizer_id: tok.tokenizer_id(),
        manifest_hash: corpus_manifest_hash(docs),
        documents: docs.len() as u64,
        rows: full_rows as u64,
        total_tokens: total as u64,
        dropped_tokens: (total - kept) as u64,
    };
    Ok(PackOutput { shards, log: DataOrderLog { header, entries } })
}

/// Rebuilds the packed token stream from the log and the original corpus.
pub fn replay<E>(log: &DataOrderLog, docs: &[Document], tok: &E) -> Result<Vec<u32>, PackError>
where
    E: Encoder + ?Sized,
{
    let actual = corpus_manifest_hash(docs);
    if actual != log.header.manifest_hash {
        return Err(PackError::ManifestMismatch { expected: log.header.manifest_hash.clone(), actual });
    }
    let mut cache: HashMap<u64, Vec<u32>> = HashMap::new();
    let mut out = Vec::with_capacity((log.header.rows as usize) * log.header.seq_len);
    for (index, e) in log.entries.iter().enumerate() {
        let doc = docs
            .get(e.doc_index as usize)
            .filter(|d| d.doc_id == e.doc_id)
            .ok_or_else(|| PackError::MissingDocument { index, doc_id: e.doc_id.clone() })?;
        let toks = cache
            .entry(e.doc_index)
            .or_insert_with(|| tokens_with_separator(tok, doc, log.header.separator));
        let (lo, hi) = (e.offset as usize, (e.offset + e.len) as usize);
        let span = toks
            .get(lo..hi)
            .ok_or_else(|| PackError::Format(format!("entry {index}: span {lo}..{hi} beyond document length")))?;
        out.extend_from_slice(span);
    }
    Ok(out)
}

/// Cuts a token stream into consecutive rows of `seq_len`, dropping any remainder.
pub fn rechunk(stream: &[u32], seq_len: usize) -> Vec<&[u32]> {
    stream.chunks_exact(seq_len).collect()
}

/// Documents (with their spans) seen between two optimizer steps.
///
/// Rows `[step_a * b, step_b * b)` with `b = batch_size * seqs_per_step`.
pub fn checkpoint_window(
    log: &DataOrderLog,
    step_a: u64,
    step_b: u64,
    batch_size: u64,
    seqs_per_step: u64,
) -> Result<BTreeMap<String, Vec<LogEntry>>, PackError> {
    let per_step = batch_size * seqs_per_step;
    let (lo, hi) = (step_a * per_step, step_b * per_step);
    if step_a > step_b || hi > log.header.rows {
        return Err(PackError::OutOfRange { lo, hi, rows: log.header.rows });
    }
    let mut out: BTreeMap<String, Vec<LogEntry>> = BTreeMap::new();
    for e in log.entries.iter().filter(|e| (lo..hi).contains(&e.seq)) {
        out.entry(e.doc_id.clone()).or_default().push(e.clone());
    }
    Ok(out)
}
