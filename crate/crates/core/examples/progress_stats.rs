//! Trend tests, ANOVA, pairwise t-tests and plateau detection over score tables.
//!
//! ```text
//! cargo run --example progress_stats [-- TABLE.csv]
//! ```

use std::fs::File;

use corpus_curate::progress::{anova, find_plateau, paired_ttest, spearman, ScoreTable};

fn main() -> anyhow::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/scores/checkpoints.csv").to_string());
    let table = ScoreTable::read_csv(File::open(&path)?)?;
    println!("{} tasks x {} checkpoints", table.tasks.len(), table.columns.len());

    for t in 0..table.tasks.len() {
        let r = spearman(&table.series(t)?)?;
        println!("  {:<10} r = {:+.3}  p = {:.4}  ({:?}, n = {})", table.tasks[t], r.r, r.p, r.method, r.n);
    }

    let groups: Vec<Vec<f64>> =
        (0..table.columns.len()).map(|j| table.column(j).into_iter().flatten().collect()).collect();
    let a = anova(&groups)?;
    println!("\nANOVA across checkpoints: F({}, {}) = {:.3}, p = {:.4}", a.df_between, a.df_within, a.f, a.p);

    let first = table.column(0);
    for j in 1..table.columns.len() {
        let c = paired_ttest(&table.columns[0], &first, &table.columns[j], &table.column(j))?;
        println!("  {} vs {}: t = {:+.3}, p = {:.4} {}", c.a, c.b, c.t, c.p, c.stars);
    }

    let steps = table.steps().expect("checkpoint columns");
    let matrix: Vec<_> = steps.iter().enumerate().map(|(j, &s)| (s, table.column(j))).collect();
    let plateau = find_plateau(&matrix)?;
    println!("\nplateau at step {} ({})", plateau.plateau_step, plateau.note);
    Ok(())
}
