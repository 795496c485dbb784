//! Averaging the last few checkpoints of a run stored as LLWC containers.
//!
//! ```text
//! cargo run --example average_checkpoints
//! ```

use corpus_curate::ckpt::{average_with, AvgConfig, WeightContainer};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn checkpoint(rng: &mut ChaCha8Rng, drift: f32) -> anyhow::Result<WeightContainer> {
    let mut c = WeightContainer::new();
    c.insert("embed.weight", vec![16, 8], (0..128).map(|_| rng.random::<f32>() - 0.5 + drift).collect())?;
    c.insert("lm_head.bias", vec![16], (0..16).map(|_| rng.random::<f32>() * 0.1 + drift).collect())?;
    Ok(c)
}

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dir = tempfile::tempdir()?;
    let mut paths = Vec::new();
    for step in 0..10 {
        let path = dir.path().join(format!("step_{:06}.llwc", (step + 1) * 1000));
        checkpoint(&mut rng, step as f32 * 0.01)?.save(&path)?;
        paths.push(path);
    }

    for window in [5, 10] {
        let cfg = AvgConfig::new(window)?;
        let selected = cfg.select(&paths);
        let containers = selected.iter().map(|p| WeightContainer::load(p)).collect::<Result<Vec<_>, _>>()?;
        let avg = average_with(&containers, &cfg)?;
        let bias = &avg.get("lm_head.bias").expect("tensor").data;
        println!(
            "last {window:>2} checkpoints ({} .. {}): mean bias {:.4}",
            selected[0].file_name().unwrap().to_string_lossy(),
            selected[selected.len() - 1].file_name().unwrap().to_string_lossy(),
            bias.iter().sum::<f32>() / bias.len() as f32
        );
        avg.save(&dir.path().join(format!("avg_last_{window}.llwc")))?;
    }
    Ok(())
}
