//! Sizing a Bloom filter and measuring its false-positive rate.
//!
//! ```text
//! cargo run --release --example bloom_filter
//! ```

use corpus_curate::dedup::{optimal_params, BloomFilter};

fn main() -> anyhow::Result<()> {
    let (n, p) = (100_000u64, 1e-3);
    let (m, k) = optimal_params(n, p)?;
    println!("n = {n}, p = {p}: m = {m} bits ({:.1} KiB), k = {k}", m as f64 / 8192.0);

    let filter = BloomFilter::new(n, p)?;
    for i in 0..n {
        filter.test_and_insert(format!("present-{i}").as_bytes());
    }
    let misses = (0..n).filter(|i| !filter.contains(format!("present-{i}").as_bytes())).count();
    let probes = 1_000_000u64;
    let fp = (0..probes).filter(|i| filter.contains(format!("absent-{i}").as_bytes())).count();
    println!("fill ratio {:.3}", filter.fill_ratio());
    println!("false negatives: {misses}");
    println!("false positives: {fp} / {probes} = {:.2e}", fp as f64 / probes as f64);

    let mut bytes = Vec::new();
    filter.write_to(&mut bytes)?;
    let restored = BloomFilter::read_from(bytes.as_slice())?;
    println!("LLBF file: {} bytes, restored contains present-7: {}", bytes.len(), restored.contains(b"present-7"));
    Ok(())
}
