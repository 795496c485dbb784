//! Content hashing shared by paragraph dedup, document uniqueness and corpus manifests.
//!
//! All hashing goes through XXH3-128 over the raw UTF-8 bytes. The output is
//! stable across platforms and releases of the `xxhash-rust` crate, so filter
//! files and manifests written on one machine can be checked on another.

use xxhash_rust::xxh3::{xxh3_128_with_seed, Xxh3};

/// 128-bit hash of `bytes` with the given seed.
#[inline]
pub fn content_hash(bytes: &[u8], seed: u64) -> u128 {
    xxh3_128_with_seed(bytes, seed)
}

/// Splits a 128-bit digest into the two 64-bit halves used for double hashing.
#[inline]
pub fn split_halves(h: u128) -> (u64, u64) {
    (h as u64, (h >> 64) as u64)
}

/// Incremental 128-bit hasher for fingerprinting a sequence of records.
///
/// Every field is length-prefixed so that `("ab", "c")` and `("a", "bc")`
/// produce different digests.
pub struct ManifestHasher {
    inner: Xxh3,
}

impl Default for ManifestHasher {
    fn default() -> Self {
        Self::new()
    }
}

impl ManifestHasher {
    pub fn new() -> Self {
        Self { inner: Xxh3::new() }
    }

    pub fn field(&mut self, bytes: &[u8]) -> &mut Self {
        self.inner.update(&(bytes.len() as u64).to_le_bytes());
        self.inner.update(bytes);
        self
    }

    pub fn finish_hex(&self) -> String {
        format!("{:032x}", self.inner.digest128())
    }
}
