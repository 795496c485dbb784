use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use super::alphabet::{byte_to_char, bytes_to_marker};
use super::pretokenize::pretokenize;
use super::{Encoder, TokenCounter, TokenizerError};

pub const VOCAB_FILE: &str = "vocab.json";
pub const MERGES_FILE: &str = "merges.txt";

/// Byte-level BPE model: specials, 256 byte tokens and ordered merges.
///
/// Models trained here use ids `0..s` for specials, `s..s+256` for bytes in
/// byte order and `s+256+i` for the `i`-th merge. Models loaded from an
/// external vocab/merges pair keep the ids of their vocab file.
#[derive(Debug, Clone)]
pub struct ByteBpeModel {
    name: String,
    specials: Vec<u32>,
    byte_ids: [u32; 256],
    merges: Vec<(u32, u32)>,
    /// (left, right) → (rank, merged id)
    ranks: HashMap<(u32, u32), (u32, u32)>,
    id_to_token: Vec<String>,
    /// Byte expansion of each id; `None` for specials.
    id_to_bytes: Vec<Option<Vec<u8>>>,
    token_to_id: HashMap<String, u32>,
}

impl ByteBpeModel {
    /// Builds a model in the canonical id layout from specials and merges over byte-layout ids.
    pub(crate) fn from_parts(name: String, specials: &[String], merges: Vec<(u32, u32)>) -> Self {
        let s = specials.len() as u32;
        let mut id_to_token: Vec<String> = specials.to_vec();
        let mut id_to_bytes: Vec<Option<Vec<u8>>> = vec![None; specials.len()];
        let mut byte_ids = [0u32; 256];
        for b in 0..=255u8 {
            byte_ids[b as usize] = s + b as u32;
            id_to_token.push(byte_to_char(b).to_string());
            id_to_bytes.push(Some(vec![b]));
        }
        let mut ranks = HashMap::with_capacity(merges.len());
        for (rank, &(l, r)) in merges.iter().enumerate() {
            let id = id_to_token.len() as u32;
            let token = format!("{}{}", id_to_token[l as usize], id_to_token[r as usize]);
            let mut bytes = id_to_bytes[l as usize].clone().expect("merge of special");
            bytes.extend_from_slice(id_to_bytes[r as usize].as_deref().expect("merge of special"));
            id_to_token.push(token);
            id_to_bytes.push(Some(bytes));
            ranks.insert((l, r), (rank as u32, id));
        }
        let token_to_id = id_to_token.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Self {
            name,
            specials: (0..s).collect(),
            byte_ids,
            merges,
            ranks,
            id_to_token,
            id_to_bytes,
            token_to_id,
        }
    }

    /// A model with no merges: every byte is its own token.
    pub fn bytes_only(specials: &[String]) -> Self {
        Self::from_parts("bytes".into(), specials, Vec::new())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn vocab_size(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn num_merges(&self) -> usize {
        self.merges.len()
    }

    pub fn specials(&self) -> impl Iterator<Item = &str> {
        self.specials.iter().map(|&id| self.id_to_token[id as usize].as_str())
    }

    pub fn token_id(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    pub fn byte_id(&self, b: u8) -> u32 {
        self.byte_ids[b as usize]
    }

    /// Merges as marker-string pairs, in training order.
    pub fn merges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.merges
            .iter()
            .map(|&(l, r)| (self.id_to_token[l as usize].as_str(), self.id_to_token[r as usize].as_str()))
    }

    /// Applies merges to a single pre-token, lowest rank first, leftmost first among equal ranks.
    fn encode_word(&self, bytes: &[u8], out: &mut Vec<u32>) {
        if bytes.len() == 1 {
            out.push(self.byte_ids[bytes[0] as usize]);
            return;
        }
        let n = bytes.len();
        let mut sym: Vec<u32> = bytes.iter().map(|&b| self.byte_ids[b as usize]).collect();
        let mut prev: Vec<usize> = (0..n).map(|i| i.wrapping_sub(1)).collect();
        let mut next: Vec<usize> = (1..=n).collect();
        let mut alive = vec![true; n];
        let mut heap = BinaryHeap::new();
        let push = |heap: &mut BinaryHeap<_>, sym: &[u32], i: usize, j: usize| {
            if let Some(&(rank, _)) = self.ranks.get(&(sym[i], sym[j])) {
                heap.push(Reverse((rank, i, sym[i], sym[j])));
            }
        };
        for i in 0..n - 1 {
            push(&mut heap, &sym, i, i + 1);
        }
        while let Some(Reverse((_, i, l, r))) = heap.pop() {
            let j = next[i];
            if !alive[i] || j >= n || sym[i] != l || sym[j] != r {
                continue;
            }
            let (_, merged) = self.ranks[&(l, r)];
            sym[i] = merged;
            alive[j] = false;
            next[i] = next[j];
            if next[i] < n {
                prev[next[i]] = i;
            }
            let p = prev[i];
            if p < n {
                push(&mut heap, &sym, p, i);
            }
            if next[i] < n {
                push(&mut heap, &sym, i, next[i]);
            }
        }
        let mut i = 0;
        while i < n {
            out.push(sym[i]);
            i = next[i];
        }
    }

    pub fn encode_bytes(&self, bytes: &[u8]) -> Vec<u32> {
        let mut out = Vec::with_capacity(bytes.len() / 3 + 1);
        for word in pretokenize(bytes) {
            self.encode_word(word, &mut out);
        }
        out
    }

    pub fn decode(&self, ids: &[u32]) -> Result<Vec<u8>, TokenizerError> {
        let mut out = Vec::new();
        for &id in ids {
            match self.id_to_bytes.get(id as usize) {
                Some(Some(bytes)) => out.extend_from_slice(bytes),
                Some(None) => {}
                None => return Err(TokenizerError::UnknownId { id, vocab_size: self.vocab_size() }),
            }
        }
        Ok(out)
    }

    /// Merges file content: one `left right` pair per line.
    pub fn merges_text(&self) -> String {
        let mut s = String::new();
        for (l, r) in self.merges() {
            s.push_str(l);
            s.push(' ');
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    /// Vocab file content: a JSON object token → id, keys sorted.
    pub fn vocab_json(&self) -> String {
        let map: serde_json::Map<String, serde_json::Value> = self
            .id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), serde_json::Value::from(i as u64)))
            .collect();
        serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("vocab serialises")
    }

    pub fn save(&self, dir: &Path) -> Result<(), TokenizerError> {
        fs::create_dir_all(dir)?;
        let mut f = fs::File::create(dir.join(VOCAB_FILE))?;
        f.write_all(self.vocab_json().as_bytes())?;
        fs::write(dir.join(MERGES_FILE), self.merges_text())?;
        Ok(())
    }

    /// Loads a directory holding `vocab.json` and `merges.txt`.
    pub fn load(dir: &Path) -> Result<Self, TokenizerError> {
        let vocab = fs::read_to_string(dir.join(VOCAB_FILE))?;
        let merges = fs::read_to_string(dir.join(MERGES_FILE))?;
        let mut model = Self::from_vocab_merges(&vocab, &merges)?;
        if let Some(name) = dir.file_name() {
            model.name = name.to_string_lossy().into_owned();
        }
        Ok(model)
    }

    /// Builds a model from a GPT-2 style vocab/merges pair.
    ///
    /// Vocab ids must be contiguous from 0. Every byte marker and every merge
    /// result must be in the vocab; other vocab entries become specials.
    /// A leading `#version` line in the merges text is ignored.
    pub fn from_vocab_merges(vocab_json: &str, merges_text: &str) -> Result<Self, TokenizerError> {
        let vocab: HashMap<String, u32> =
            serde_json::from_str(vocab_json).map_err(|e| TokenizerError::Format(format!("vocab: {e}")))?;
        let v = vocab.len();
        let mut id_to_token = vec![None::<String>; v];
        for (tok, &id) in &vocab {
            let slot = id_to_token
                .get_mut(id as usize)
                .ok_or_else(|| TokenizerError::Format(format!("vocab id {id} out of range 0..{v}")))?;
            if slot.is_some() {
                return Err(TokenizerError::Format(format!("duplicate vocab id {id}")));
            }
            *slot = Some(tok.clone());
        }
        let id_to_token: Vec<String> = id_to_token.into_iter().map(Option::unwrap).collect();
        let mut id_to_bytes: Vec<Option<Vec<u8>>> = vec![None; v];
        let mut byte_ids = [0u32; 256];
        for b in 0..=255u8 {
            let m = byte_to_char(b).to_string();
            let id = *vocab
                .get(&m)
                .ok_or_else(|| TokenizerError::Format(format!("byte marker {m:?} missing from vocab")))?;
            byte_ids[b as usize] = id;
            id_to_bytes[id as usize] = Some(vec![b]);
        }
        let mut merges = Vec::new();
        let mut ranks = HashMap::new();
        for (lineno, line) in merges_text.lines().enumerate() {
            if line.is_empty() || (lineno == 0 && line.starts_with("#version")) {
                continue;
            }
            let (l, r) = line
                .split_once(' ')
                .filter(|(_, r)| !r.contains(' '))
                .ok_or_else(|| TokenizerError::Format(format!("merges line {}: {line:?}", lineno + 1)))?;
            let lookup = |t: &str| {
                vocab
                    .get(t)
                    .copied()
                    .ok_or_else(|| TokenizerError::Format(format!("merges line {}: unknown token {t:?}", lineno + 1)))
            };
            let (li, ri) = (lookup(l)?, lookup(r)?);
            let merged = lookup(&format!("{l}{r}"))?;
            let (lb, rb) = match (&id_to_bytes[li as usize], &id_to_bytes[ri as usize]) {
                (Some(a), Some(b)) => (a.clone(), b.clone()),
                _ => {
                    return Err(TokenizerError::Format(format!(
                        "merges line {}: operand not built from earlier merges",
                        lineno + 1
                    )))
                }
            };
            if id_to_bytes[merged as usize].is_none() {
                id_to_bytes[merged as usize] = Some([lb, rb].concat());
            }
            if let Entry::Vacant(slot) = ranks.entry((li, ri)) {
                slot.insert((merges.len() as u32, merged));
                merges.push((li, ri));
            }
        }
        let specials = (0..v as u32).filter(|&i| id_to_bytes[i as usize].is_none()).collect();
        let token_to_id = vocab;
        Ok(Self {
            name: "external".into(),
            specials,
            byte_ids,
            merges,
            ranks,
            id_to_token,
            id_to_bytes,
            token_to_id,
        })
    }

    /// Marker-string form of a raw byte string, as it appears in vocab files.
    pub fn marker(bytes: &[u8]) -> String {
        bytes_to_marker(bytes)
    }
}

impl TokenCounter for ByteBpeModel {
    fn count_tokens(&self, text: &str) -> usize {
        let mut out = Vec::new();
        pretokenize(text.as_bytes()).into_iter().map(|w| {
            out.clear();
            self.encode_word(w, &mut out);
            out.len()
        }).sum()
    }
}

impl Encoder for ByteBpeModel {
    fn encode(&self, text: &str) -> Vec<u32> {
        self.encode_bytes(text.as_bytes())
    }

    fn vocab_size(&self) -> usize {
        self.id_to_token.len()
    }

    fn token_label(&self, id: u32) -> Option<String> {
        self.token(id).map(str::to_owned)
    }

    fn tokenizer_id(&self) -> String {
        self.name.clone()
    }
}
