use serde::{Deserialize, Serialize};

use super::special::student_t_two_sided;
use super::{Stars, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub df: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub a: String,
    pub b: String,
    pub t: f64,
    pub p: f64,
    pub stars: Stars,
    /// Tasks scored by both sides.
    pub n: usize,
    pub mean_diff: f64,
}

/// Paired two-sided t-test on `a[i] - b[i]`. Tasks missing on either side are
/// dropped before testing.
pub fn paired_ttest(
    a_id: &str,
    a: &[Option<f64>],
    b_id: &str,
    b: &[Option<f64>],
) -> Result<PairwiseComparison, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .filter_map(|(x, y)| Some((*x)? - (*y)?))
        .collect();
    let n = diffs.len();
    if n < 2 {
        return Err(StatsError::TooFew { need: 2, got: n });
    }
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let (t, p) = if var == 0.0 {
        if mean != 0.0 {
            return Err(StatsError::DegenerateDifferences);
        }
        (0.0, 1.0)
    } else {
        let t = mean / (var / n as f64).sqrt();
        (t, student_t_two_sided(t, (n - 1) as f64))
    };
    Ok(PairwiseComparison {
        a: a_id.to_string(),
        b: b_id.to_string(),
        t,
        p,
        stars: Stars::from_p(p),
        n,
        mean_diff: mean,
    })
}

/// Unpaired Student t-test with pooled variance.
pub fn pooled_ttest(a: &[f64], b: &[f64]) -> Result<TTest, StatsError> {
    let (na, nb) = (a.len(), b.len());
    if na < 2 || nb < 2 {
        return Err(StatsError::TooFew { need: 2, got: na.min(nb) });
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let ss = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() + b.iter().map(|x| (x - mb).powi(2)).sum::<f64>();
    let df = (na + nb - 2) as f64;
    let se = (ss / df * (1.0 / na as f64 + 1.0 / nb as f64)).sqrt();
    if se == 0.0 {
        if ma == mb {
            return Ok(TTest { t: 0.0, p: 1.0, df });
        }
        let t = if ma > mb { f64::INFINITY } else { f64::NEG_INFINITY };
        return Ok(TTest { t, p: 0.0, df });
    }
    let t = (ma - mb) / se;
    Ok(TTest { t, p: student_t_two_sided(t, df), df })
}
