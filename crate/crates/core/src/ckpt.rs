//! Element-wise checkpoint averaging over a minimal named-tensor container.
//!
//! Container layout (`LLWC`, little-endian):
//! magic `LLWC`, version `u32`, tensor count `u32`, then per tensor the name
//! length `u32`, UTF-8 name, rank `u32`, dims `u64 × rank` and the `f32`
//! payload in row-major order.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"LLWC";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CkptError {
    #[error("no checkpoints to average")]
    Empty,
    #[error("tensor names differ from the first checkpoint (container {index}): missing {missing:?}, unexpected {unexpected:?}")]
    NameMismatch { index: usize, missing: Vec<String>, unexpected: Vec<String> },
    #[error("shape mismatch for tensors {names:?} (container {index})")]
    ShapeMismatch { index: usize, names: Vec<String> },
    #[error("tensor {name}: {len} values do not fill shape {shape:?}")]
    BadLength { name: String, shape: Vec<u64>, len: usize },
    #[error("duplicate tensor name {0}")]
    DuplicateName(String),
    #[error("{0} weights given for {1} checkpoints")]
    WeightCount(usize, usize),
    #[error("weights must be finite and sum to a positive value")]
    BadWeights,
    #[error("window must be at least 1")]
    ZeroWindow,
    #[error("not an LLWC container: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<u64>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<u64>, data: Vec<f32>) -> Result<Self, CkptError> {
        let t = Self { shape, data };
        if t.numel() != t.data.len() as u64 {
            return Err(CkptError::BadLength { name: String::new(), shape: t.shape, len: t.data.len() });
        }
        Ok(t)
    }

    pub fn numel(&self) -> u64 {
        self.shape.iter().product()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightContainer {
    tensors: IndexMap<String, Tensor>,
}

impl WeightContainer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, shape: Vec<u64>, data: Vec<f32>) -> Result<(), CkptError> {
        let name = name.into();
        if self.tensors.contains_key(&name) {
            return Err(CkptError::DuplicateName(name));
        }
        let tensor = Tensor::new(shape, data).map_err(|e| match e {
            CkptError::BadLength { shape, len, .. } => CkptError::BadLength { name: name.clone(), shape, len },
            e => e,
        })?;
        self.tensors.insert(name, tensor);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Self {
        let tensors = self
            .tensors
            .iter()
            .map(|(k, t)| (k.clone(), Tensor { shape: t.shape.clone(), data: t.data.iter().map(|&v| f(v)).collect() }))
            .collect();
        Self { tensors }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), CkptError> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.tensors.len() as u32).to_le_bytes())?;
        for (name, t) in &self.tensors {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&(t.shape.len() as u32).to_le_bytes())?;
            for d in &t.shape {
                w.write_all(&d.to_le_bytes())?;
            }
            let mut buf = Vec::with_capacity(t.data.len() * 4);
            for v in &t.data {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, CkptError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(CkptError::Format("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(CkptError::Format(format!("unsupported version {version}")));
        }
        let count = read_u32(&mut r)?;
        let mut out = Self::new();
        for _ in 0..count {
            let name_len = read_u32(&mut r)? as usize;
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|_| CkptError::Format("tensor name is not UTF-8".into()))?;
            let rank = read_u32(&mut r)?;
            let shape = (0..rank).map(|_| read_u64(&mut r)).collect::<io::Result<Vec<_>>>()?;
            let numel = shape
                .iter()
                .try_fold(1u64, |acc, &d| acc.checked_mul(d))
                .and_then(|n| usize::try_from(n).ok())
                .and_then(|n| n.checked_mul(4).map(|_| n))
                .ok_or_else(|| CkptError::Format(format!("tensor {name}: shape too large")))?;
            let mut bytes = Vec::new();
            (&mut r).take(numel as u64 * 4).read_to_end(&mut bytes)?;
            if bytes.len() != numel * 4 {
                return Err(CkptError::Format(format!("tensor {name}: truncated payload")));
            }
            let data = bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
            out.insert(name, shape, data)?;
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<(), CkptError> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self, CkptError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AvgConfig {
    /// Number of most recent checkpoints to average.
    pub window: usize,
    /// Per-checkpoint weights; `None` means a plain mean.
    pub weights: Option<Vec<f64>>,
}

impl Default for AvgConfig {
    fn default() -> Self {
        Self { window: 5, weights: None }
    }
}

impl AvgConfig {
    pub fn new(window: usize) -> Result<Self, CkptError> {
        if window == 0 {
            return Err(CkptError::ZeroWindow);
        }
        Ok(Self { window, weights: None })
    }

    /// The last `window` items of `ordered` (oldest first).
    pub fn select<'a, T>(&self, ordered: &'a [T]) -> &'a [T] {
        &ordered[ordered.len().saturating_sub(self.window)..]
    }
}

fn check_compatible(containers: &[WeightContainer]) -> Result<(), CkptError> {
    let first = containers.first().ok_or(CkptError::Empty)?;
    for (index, c) in containers.iter().enumerate().skip(1) {
        let missing: Vec<String> = first.tensors.keys().filter(|k| !c.tensors.contains_key(*k)).cloned().collect();
        let unexpected: Vec<String> = c.tensors.keys().filter(|k| !first.tensors.contains_key(*k)).cloned().collect();
        if !missing.is_empty() || !unexpected.is_empty() {
            return Err(CkptError::NameMismatch { index, missing, unexpected });
        }
        let names: Vec<String> = first
            .tensors
            .iter()
            .filter(|(k, t)| c.tensors[k.as_str()].shape != t.shape)
            .map(|(k, _)| k.clone())
            .collect();
        if !names.is_empty() {
            return Err(CkptError::ShapeMismatch { index, names });
        }
    }
    Ok(())
}

/// Element-wise arithmetic mean. Sums run in `f64` in input order and are
/// rounded to `f32` once.
pub fn average(containers: &[WeightContainer]) -> Result<WeightContainer, CkptError> {
    let w = vec![1.0; containers.len()];
    combine(containers, &w, containers.len() as f64)
}

/// Element-wise weighted mean with weights normalised by their sum.
pub fn weighted_average(containers: &[WeightContainer], weights: &[f64]) -> Result<WeightContainer, CkptError> {
    if weights.len() != containers.len() {
        return Err(CkptError::WeightCount(weights.len(), containers.len()));
    }
    let total: f64 = weights.iter().sum();
    if !total.is_finite() || total <= 0.0 || weights.iter().any(|w| !w.is_finite()) {
        return Err(CkptError::BadWeights);
    }
    combine(containers, weights, total)
}

pub fn average_with(containers: &[WeightContainer], cfg: &AvgConfig) -> Result<WeightContainer, CkptError> {
    if cfg.window == 0 {
        return Err(CkptError::ZeroWindow);
    }
    let selected = cfg.select(containers);
    match &cfg.weights {
        None => average(selected),
        Some(w) => weighted_average(selected, cfg.select(w)),
    }
}

fn combine(containers: &[WeightContainer], weights: &[f64], denom: f64) -> Result<WeightContainer, CkptError> {
    check_compatible(containers)?;
    let first = &containers[0];
    let tensors: Vec<(String, Tensor)> = first
        .tensors
        .par_iter()
        .map(|(name, t)| {
            let inputs: Vec<&[f32]> = containers.iter().map(|c| c.tensors[name.as_str()].data.as_slice()).collect();
            let data = (0..t.data.len())
                .map(|i| {
                    let mut acc = 0.0f64;
                    for (src, w) in inputs.iter().zip(weights) {
                        acc += w * f64::from(src[i]);
                    }
                    (acc / denom) as f32
                })
                .collect();
            (name.clone(), Tensor { shape: t.shape.clone(), data })
        })
        .collect();
    Ok(WeightContainer { tensors: tensors.into_iter().collect() })
}

/// Manifest of a raw tensor directory: `{"tensors": [{"name", "shape", "file"}]}`,
/// each file holding little-endian `f32` values.
#[derive(Debug, Clone, Deserialize)]
pub struct RawManifest {
    pub tensors: Vec<RawTensorEntry>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RawTensorEntry {
    pub name: String,
    pub shape: Vec<u64>,
    pub file: PathBuf,
}

pub const RAW_MANIFEST: &str = "manifest.json";

/// Builds a container from a directory holding `manifest.json` and raw tensor files.
pub fn from_raw_dir(dir: &Path) -> Result<WeightContainer, CkptError> {
    let manifest: RawManifest = serde_json::from_reader(BufReader::new(File::open(dir.join(RAW_MANIFEST))?))
        .map_err(|e| CkptError::Format(format!("{RAW_MANIFEST}: {e}")))?;
    let mut out = WeightContainer::new();
    for entry in manifest.tensors {
        let bytes = std::fs::read(dir.join(&entry.file))?;
        if bytes.len() % 4 != 0 {
            return Err(CkptError::Format(format!("{}: size is not a multiple of 4", entry.file.display())));
        }
        let data = bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        out.insert(entry.name, entry.shape, data)?;
    }
    Ok(out)
}
