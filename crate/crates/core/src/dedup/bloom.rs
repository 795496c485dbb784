//! Bloom filter with atomic test-and-insert.
//!
//! Probe indices come from one XXH3-128 digest split into halves `h1`, `h2`:
//! `idx_i = (h1 + i * h2) mod m` for `i in 0..k`.
//!
//! On-disk layout (little-endian): magic `LLBF`, version `u32`, `m: u64`,
//! `k: u32`, `seed: u64`, then `ceil(m / 64)` `u64` words where bit `i` lives
//! at word `i / 64`, bit `i % 64`.

use std::io::{self, Read, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::hash::{content_hash, split_halves};

const MAGIC: &[u8; 4] = b"LLBF";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BloomError {
    #[error("n_expected must be >= 1, got {0}")]
    BadCapacity(u64),
    #[error("p_target must lie strictly between 0 and 1, got {0}")]
    BadProbability(f64),
    #[error("filter would need {0} bits, which does not fit in memory")]
    TooLarge(f64),
    #[error("not a bloom filter file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Sizing parameters the filter was built from. Absent for filters loaded from disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BloomSizing {
    pub n_expected: u64,
    pub p_target: f64,
}

#[derive(Debug)]
pub struct BloomFilter {
    words: Vec<AtomicU64>,
    m: u64,
    k: u32,
    seed: u64,
    sizing: Option<BloomSizing>,
    inserted: AtomicU64,
}

/// Optimal `(m, k)` for `n` items at false-positive rate `p`.
pub fn optimal_params(n_expected: u64, p_target: f64) -> Result<(u64, u32), BloomError> {
    if n_expected < 1 {
        return Err(BloomError::BadCapacity(n_expected));
    }
    if !(p_target > 0.0 && p_target < 1.0) {
        return Err(BloomError::BadProbability(p_target));
    }
    let ln2 = std::f64::consts::LN_2;
    let n = n_expected as f64;
    let m = (-n * p_target.ln() / (ln2 * ln2)).ceil();
    if !m.is_finite() || m > (1u64 << 40) as f64 {
        return Err(BloomError::TooLarge(m));
    }
    let m = (m as u64).max(1);
    let k = ((m as f64 / n) * ln2).round().max(1.0) as u32;
    Ok((m, k))
}

impl BloomFilter {
    pub fn new(n_expected: u64, p_target: f64) -> Result<Self, BloomError> {
        Self::with_seed(n_expected, p_target, 0)
    }

    pub fn with_seed(n_expected: u64, p_target: f64, seed: u64) -> Result<Self, BloomError> {
        let (m, k) = optimal_params(n_expected, p_target)?;
        let mut filter = Self::from_params(m, k, seed);
        filter.sizing = Some(BloomSizing { n_expected, p_target });
        Ok(filter)
    }

    /// Raw constructor; `m` and `k` are clamped to at least 1.
    pub fn from_params(m: u64, k: u32, seed: u64) -> Self {
        let m = m.max(1);
        let n_words = m.div_ceil(64) as usize;
        Self {
            words: (0..n_words).map(|_| AtomicU64::new(0)).collect(),
            m,
            k: k.max(1),
            seed,
            sizing: None,
            inserted: AtomicU64::new(0),
        }
    }

    pub fn num_bits(&self) -> u64 {
        self.m
    }

    pub fn num_hashes(&self) -> u32 {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sizing(&self) -> Option<BloomSizing> {
        self.sizing
    }

    /// Keys inserted as new since this filter was created or loaded.
    pub fn inserted(&self) -> u64 {
        self.inserted.load(Ordering::Relaxed)
    }

    /// Fraction of set bits.
    pub fn fill_ratio(&self) -> f64 {
        let ones: u64 = self.words.iter().map(|w| w.load(Ordering::Relaxed).count_ones() as u64).sum();
        ones as f64 / self.m as f64
    }

    #[inline]
    fn probes(&self, key: &[u8]) -> impl Iterator<Item = u64> + '_ {
        let (h1, h2) = split_halves(content_hash(key, self.seed));
        let m = self.m;
        (0..self.k as u64).map(move |i| h1.wrapping_add(i.wrapping_mul(h2)) % m)
    }

    pub fn contains(&self, key: &[u8]) -> bool {
        self.probes(key).all(|bit| {
            let word = self.words[(bit / 64) as usize].load(Ordering::Relaxed);
            word & (1u64 << (bit % 64)) != 0
        })
    }

    /// Sets the key's bits and returns `true` iff all of them were already set.
    ///
    /// Safe to call from several threads at once; each bit is set with `fetch_or`.
    pub fn test_and_insert(&self, key: &[u8]) -> bool {
        let mut seen = true;
        for bit in self.probes(key) {
            let mask = 1u64 << (bit % 64);
            let prev = self.words[(bit / 64) as usize].fetch_or(mask, Ordering::Relaxed);
            seen &= prev & mask != 0;
        }
        if !seen {
            self.inserted.fetch_add(1, Ordering::Relaxed);
        }
        seen
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&self.m.to_le_bytes())?;
        w.write_all(&self.k.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        for word in &self.words {
            w.write_all(&word.load(Ordering::Relaxed).to_le_bytes())?;
        }
        w.flush()
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, BloomError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(BloomError::Format(format!("bad magic {magic:?}")));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(BloomError::Format(format!("unsupported version {version}")));
        }
        let m = read_u64(&mut r)?;
        let k = read_u32(&mut r)?;
        let seed = read_u64(&mut r)?;
        if m == 0 || k == 0 || m > (1u64 << 40) {
            return Err(BloomError::Format(format!("invalid parameters m={m} k={k}")));
        }
        let filter = Self::from_params(m, k, seed);
        for word in &filter.words {
            word.store(read_u64(&mut r)?, Ordering::Relaxed);
        }
        Ok(filter)
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
