use serde::{Deserialize, Serialize};

use super::special::student_t_two_sided;
use super::StatsError;

/// Largest sample size for which p is computed by full permutation enumeration.
pub const EXACT_MAX_N: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSeries {
    pub task: String,
    points: Vec<(u64, f64)>,
}

impl CheckpointSeries {
    pub fn new(task: impl Into<String>, points: Vec<(u64, f64)>) -> Result<Self, StatsError> {
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(StatsError::UnsortedSteps { prev: w[0].0, next: w[1].0 });
            }
        }
        Ok(Self { task: task.into(), points })
    }

    pub fn points(&self) -> &[(u64, f64)] {
        &self.points
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    ExactPermutation,
    TApproximation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub p: f64,
    pub n: usize,
    pub method: PValueMethod,
}

/// 1-based ranks with ties given their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(series: &CheckpointSeries) -> Result<CorrelationResult, StatsError> {
    let x: Vec<f64> = series.points.iter().map(|p| p.0 as f64).collect();
    let y: Vec<f64> = series.points.iter().map(|p| p.1).collect();
    spearman_xy(&x, &y)
}

/// Spearman's rho with a two-sided p-value.
///
/// For `n <= 8` the p-value is the share of all `n!` pairings whose |rho| is at
/// least the observed one. Doubled, centred ranks are integers, so that
/// comparison is exact. Larger samples use `t = r sqrt((n-2)/(1-r²))` on `n-2` df.
pub fn spearman_xy(x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFew { need: 3, got: n });
    }
    let centred = |r: Vec<f64>| -> Vec<i64> { r.into_iter().map(|v| (2.0 * v) as i64 - (n as i64 + 1)).collect() };
    let rx = centred(average_ranks(x));
    let ry = centred(average_ranks(y));
    let sxx: i64 = rx.iter().map(|v| v * v).sum();
    let syy: i64 = ry.iter().map(|v| v * v).sum();
    if sxx == 0 {
        return Err(StatsError::ZeroVariance("x"));
    }
    if syy == 0 {
        return Err(StatsError::ZeroVariance("y"));
    }
    let sxy: i64 = rx.iter().zip(&ry).map(|(a, b)| a * b).sum();
    let r = (sxy as f64 / ((sxx as f64) * (syy as f64)).sqrt()).clamp(-1.0, 1.0);

    if n <= EXACT_MAX_N {
        let (hits, total) = permutation_count(&rx, &ry, sxy.abs());
        return Ok(CorrelationResult { r, p: hits as f64 / total as f64, n, method: PValueMethod::ExactPermutation });
    }
    let df = (n - 2) as f64;
    let p = if r.abs() >= 1.0 { 0.0 } else { student_t_two_sided(r * (df / (1.0 - r * r)).sqrt(), df) };
    Ok(CorrelationResult { r, p, n, method: PValueMethod::TApproximation })
}

/// Counts permutations of `ry` with |Σ rx·ry_perm| >= `threshold` (Heap's algorithm).
fn permutation_count(rx: &[i64], ry: &[i64], threshold: i64) -> (u64, u64) {
    let n = ry.len();
    let mut perm = ry.to_vec();
    let dot = |p: &[i64]| rx.iter().zip(p).map(|(a, b)| a * b).sum::<i64>();
    let mut hits = u64::from(dot(&perm).abs() >= threshold);
    let mut total = 1u64;
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            total += 1;
            hits += u64::from(dot(&perm).abs() >= threshold);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    (hits, total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(scores: &[f64]) -> CheckpointSeries {
        CheckpointSeries::new("t", scores.iter().enumerate().map(|(i, &s)| ((i as u64 + 1) * 1000, s)).collect()).unwrap()
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
    }

    #[test]
    fn monotone_series() {
        let up = spearman(&series(&[0.1, 0.2, 0.3, 0.4])).unwrap();
        assert_eq!(up.r, 1.0);
        // only the identity and the reversal reach |r| = 1 among 4! pairings
        assert_eq!(up.p, 2.0 / 24.0);
        let down = spearman(&series(&[0.4, 0.3, 0.2, 0.1])).unwrap();
        assert_eq!(down.r, -1.0);
        let long_up = spearman(&series(&(0..20).map(|i| i as f64).collect::<Vec<_>>())).unwrap();
        assert_eq!((long_up.r, long_up.p, long_up.method), (1.0, 0.0, PValueMethod::TApproximation));
    }

    #[test]
    fn errors() {
        assert_eq!(spearman(&series(&[0.1, 0.2])), Err(StatsError::TooFew { need: 3, got: 2 }));
        assert_eq!(spearman(&series(&[0.5, 0.5, 0.5])), Err(StatsError::ZeroVariance("y")));
        assert!(CheckpointSeries::new("t", vec![(2, 0.1), (1, 0.2)]).is_err());
    }
}
