//! Shard discovery, streaming JSONL readers and text segmentation.
//!
//! Shards are JSON Lines files, optionally gzip-compressed (detected from the
//! magic bytes, not the extension). Each non-blank line is one crawl record:
//!
//! ```json
//! {"raw_content": "...", "doc_id": "2014-52/0086/de_head.json.gz/84",
//!  "url": "https://...", "quality_signals": {"ccnet_perplexity": 41.2}}
//! ```

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Unreadable { path: PathBuf, source: io::Error },
    #[error("read error at line {line}: {source}")]
    Io { line: usize, source: io::Error },
    #[error("malformed record at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("cannot infer partition from {0}; pass an explicit partition")]
    UnknownPartition(PathBuf),
    #[error("bad input pattern {pattern}: {message}")]
    BadPattern { pattern: String, message: String },
}

/// Quality partition of a crawl record, ordered from best to worst.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Head,
    Middle,
    Tail,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Head, Partition::Middle, Partition::Tail];

    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Head => "head",
            Partition::Middle => "middle",
            Partition::Tail => "tail",
        }
    }

    /// Infers the partition from a file name containing exactly one of
    /// `head`, `middle` or `tail`.
    pub fn infer(path: &Path) -> Option<Partition> {
        let name = path.file_name()?.to_string_lossy().to_lowercase();
        let hits: Vec<Partition> = Partition::ALL
            .into_iter()
            .filter(|p| name.contains(p.as_str()))
            .collect();
        match hits.as_slice() {
            [one] => Some(*one),
            _ => None,
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Partition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "head" => Ok(Partition::Head),
            "middle" => Ok(Partition::Middle),
            "tail" => Ok(Partition::Tail),
            other => Err(format!("unknown partition {other:?} (expected head, middle or tail)")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QualitySignals {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ccnet_perplexity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub raw_content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(rename = "quality_signals", default)]
    pub quality: QualitySignals,
    pub partition: Partition,
    #[serde(default)]
    pub dup_flag: bool,
    /// Set by dedup when every paragraph of the document was removed.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub emptied: bool,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, raw_content: impl Into<String>, partition: Partition) -> Self {
        Self {
            doc_id: doc_id.into(),
            raw_content: raw_content.into(),
            url: None,
            quality: QualitySignals::default(),
            partition,
            dup_flag: false,
            emptied: false,
        }
    }

    pub fn with_url(mut self, url: impl Into<String>) -> Self {
        self.url = Some(url.into());
        self
    }

    pub fn with_perplexity(mut self, ppl: f64) -> Self {
        self.quality.ccnet_perplexity = Some(ppl);
        self
    }

    pub fn paragraphs(&self) -> Vec<Paragraph<'_>> {
        split_paragraphs(&self.raw_content)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Paragraph<'a> {
    pub text: &'a str,
    pub index: usize,
}

/// Splits on `\n` and drops empty segments. Indices count retained paragraphs.
pub fn split_paragraphs(text: &str) -> Vec<Paragraph<'_>> {
    text.split('\n')
        .filter(|s| !s.is_empty())
        .enumerate()
        .map(|(index, text)| Paragraph { text, index })
        .collect()
}

/// Number of maximal runs of non-whitespace characters (Unicode whitespace).
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardRef {
    pub path: PathBuf,
    pub snapshot_id: Option<String>,
    pub partition: Partition,
}

impl ShardRef {
    pub fn from_path(path: impl Into<PathBuf>, partition: Option<Partition>) -> Result<Self, CorpusError> {
        let path = path.into();
        let partition = match partition.or_else(|| Partition::infer(&path)) {
            Some(p) => p,
            None => return Err(CorpusError::UnknownPartition(path)),
        };
        let snapshot_id = snapshot_from_path(&path);
        Ok(Self { path, snapshot_id, partition })
    }
}

/// Finds a `YYYY_WW` / `YYYY-WW` snapshot tag anywhere in the path, normalised to `YYYY_WW`.
pub fn snapshot_from_path(path: &Path) -> Option<String> {
    let s = path.to_string_lossy();
    let b = s.as_bytes();
    (0..b.len().saturating_sub(6)).find_map(|i| {
        let w = &b[i..i + 7];
        let digits = |r: &[u8]| r.iter().all(u8::is_ascii_digit);
        let bounded_left = i == 0 || !b[i - 1].is_ascii_digit();
        let bounded_right = i + 7 == b.len() || !b[i + 7].is_ascii_digit();
        let week: u32 = std::str::from_utf8(&w[5..7]).ok()?.parse().ok()?;
        (digits(&w[..4])
            && (w[4] == b'_' || w[4] == b'-')
            && digits(&w[5..7])
            && (1..=53).contains(&week)
            && bounded_left
            && bounded_right)
            .then(|| format!("{}_{}", &s[i..i + 4], &s[i + 5..i + 7]))
    })
}

fn is_shard_name(p: &Path) -> bool {
    let name = p.file_name().map(|n| n.to_string_lossy().to_lowercase()).unwrap_or_default();
    [".jsonl", ".jsonl.gz", ".json.gz", ".json"].iter().any(|ext| name.ends_with(ext))
}

/// Expands inputs (directories, files or glob patterns) to a sorted, de-duplicated shard list.
pub fn discover_shards<S: AsRef<str>>(
    inputs: &[S],
    partition: Option<Partition>,
) -> Result<Vec<ShardRef>, CorpusError> {
    let mut paths = Vec::new();
    for input in inputs {
        let input = input.as_ref();
        let p = Path::new(input);
        if p.is_dir() {
            for entry in walkdir::WalkDir::new(p).follow_links(true) {
                let entry = entry.map_err(|e| CorpusError::BadPattern {
                    pattern: input.to_string(),
                    message: e.to_string(),
                })?;
                if entry.file_type().is_file() && is_shard_name(entry.path()) {
                    paths.push(entry.into_path());
                }
            }
        } else if p.is_file() {
            paths.push(p.to_path_buf());
        } else {
            let matches = glob::glob(input).map_err(|e| CorpusError::BadPattern {
                pattern: input.to_string(),
                message: e.to_string(),
            })?;
            let before = paths.len();
            for m in matches.flatten() {
                if m.is_file() {
                    paths.push(m);
                }
            }
            if paths.len() == before && !input.contains(['*', '?', '[']) {
                return Err(CorpusError::Unreadable {
                    path: p.to_path_buf(),
                    source: io::Error::new(io::ErrorKind::NotFound, "no such file or directory"),
                });
            }
        }
    }
    paths.sort();
    paths.dedup();
    paths.into_iter().map(|p| ShardRef::from_path(p, partition)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OnError {
    #[default]
    Skip,
    Abort,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

#[derive(Deserialize)]
struct RawRecord {
    raw_content: String,
    doc_id: String,
    #[serde(default)]
    url: Option<String>,
    #[serde(default)]
    quality_signals: Option<Value>,
    #[serde(default)]
    dup_flag: Option<bool>,
    #[serde(default)]
    partition: Option<Partition>,
}

/// Accepts either a bare number or the span form `[[start, end, value], ...]`.
fn parse_perplexity(signals: &Value) -> Result<Option<f64>, String> {
    let v = match signals.get("ccnet_perplexity") {
        None | Some(Value::Null) => return Ok(None),
        Some(v) => v,
    };
    let x = match v {
        Value::Number(n) => n.as_f64(),
        Value::Array(spans) => spans
            .first()
            .and_then(|s| s.as_array())
            .and_then(|s| s.get(2))
            .and_then(Value::as_f64),
        _ => None,
    };
    match x {
        Some(x) if x.is_finite() && x >= 0.0 => Ok(Some(x)),
        Some(x) => Err(format!("ccnet_perplexity must be finite and non-negative, got {x}")),
        None => Err(format!("unsupported ccnet_perplexity value {v}")),
    }
}

/// Streaming reader over one shard. Yields documents in file order.
pub struct ShardReader {
    reader: Box<dyn BufRead + Send>,
    partition: Partition,
    on_error: OnError,
    line: usize,
    buf: Vec<u8>,
    errors: Vec<LineError>,
    utf8_repairs: usize,
    done: bool,
}

impl ShardReader {
    /// Wraps any byte source; gzip is detected from the leading magic bytes.
    pub fn from_reader<R: Read + Send + 'static>(
        reader: R,
        partition: Partition,
        on_error: OnError,
    ) -> io::Result<Self> {
        let mut buffered = BufReader::with_capacity(1 << 16, reader);
        let is_gzip = buffered.fill_buf()?.starts_with(&[0x1f, 0x8b]);
        let reader: Box<dyn BufRead + Send> = if is_gzip {
            Box::new(BufReader::with_capacity(1 << 16, MultiGzDecoder::new(buffered)))
        } else {
            Box::new(buffered)
        };
        Ok(Self {
            reader,
            partition,
            on_error,
            line: 0,
            buf: Vec::new(),
            errors: Vec::new(),
            utf8_repairs: 0,
            done: false,
        })
    }

    /// Malformed lines skipped so far (Skip mode).
    pub fn errors(&self) -> &[LineError] {
        &self.errors
    }

    /// Lines whose invalid UTF-8 was replaced with U+FFFD.
    pub fn utf8_repairs(&self) -> usize {
        self.utf8_repairs
    }

    fn parse_line(&mut self, line_no: usize) -> Result<Option<Document>, String> {
        let mut bytes = self.buf.as_slice();
        while let [rest @ .., b'\n' | b'\r'] = bytes {
            bytes = rest;
        }
        if bytes.iter().all(u8::is_ascii_whitespace) {
            return Ok(None);
        }
        let text = match std::str::from_utf8(bytes) {
            Ok(s) => std::borrow::Cow::Borrowed(s),
            Err(_) => {
                self.utf8_repairs += 1;
                log::warn!("line {line_no}: invalid UTF-8 replaced");
                String::from_utf8_lossy(bytes)
            }
        };
        let rec: RawRecord = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        if rec.doc_id.is_empty() {
            return Err("empty doc_id".into());
        }
        let ccnet_perplexity = match &rec.quality_signals {
            Some(q) => parse_perplexity(q)?,
            None => None,
        };
        Ok(Some(Document {
            doc_id: rec.doc_id,
            raw_content: rec.raw_content,
            url: rec.url,
            quality: QualitySignals { ccnet_perplexity },
            partition: rec.partition.unwrap_or(self.partition),
            dup_flag: rec.dup_flag.unwrap_or(false),
            emptied: false,
        }))
    }
}

impl Iterator for ShardReader {
    type Item = Result<Document, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => {
                    self.done = true;
                    return None;
                }
                Ok(_) => {}
                Err(source) => {
                    self.done = true;
                    return Some(Err(CorpusError::Io { line: self.line + 1, source }));
                }
            }
            self.line += 1;
            let line = self.line;
            match self.parse_line(line) {
                Ok(Some(doc)) => return Some(Ok(doc)),
                Ok(None) => continue,
                Err(message) => match self.on_error {
                    OnError::Skip => {
                        log::debug!("skipping malformed line {line}: {message}");
                        self.errors.push(LineError { line, message });
                    }
                    OnError::Abort => {
                        self.done = true;
                        return Some(Err(CorpusError::Malformed { line, message }));
                    }
                },
            }
        }
        None
    }
}

/// Opens a shard file for streaming.
pub fn open_shard(shard: &ShardRef, on_error: OnError) -> Result<ShardReader, CorpusError> {
    let unreadable = |source| CorpusError::Unreadable { path: shard.path.clone(), source };
    let file = File::open(&shard.path).map_err(unreadable)?;
    ShardReader::from_reader(file, shard.partition, on_error).map_err(unreadable)
}

/// Reads a whole shard into memory, returning the documents and the skipped-line records.
pub fn read_shard(shard: &ShardRef, on_error: OnError) -> Result<(Vec<Document>, Vec<LineError>), CorpusError> {
    let mut reader = open_shard(shard, on_error)?;
    let docs = reader.by_ref().collect::<Result<Vec<_>, _>>()?;
    Ok((docs, reader.errors.clone()))
}
