use serde::{Deserialize, Serialize};

use super::ttest::paired_ttest;
use super::StatsError;

pub const PLATEAU_METHOD: &str = "earliest checkpoint whose paired t-tests against every later checkpoint are all ns (p > 0.05)";
pub const NO_PLATEAU_NOTE: &str = "no plateau: every earlier checkpoint differs significantly from some later one";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauResult {
    pub plateau_step: u64,
    pub plateaued: bool,
    pub note: String,
}

/// Finds the earliest checkpoint after which no significant change follows.
///
/// `matrix` holds one entry per checkpoint (ascending steps) with per-task
/// scores in a shared task order. A constant non-zero shift between two
/// checkpoints has no t statistic; it is counted as a significant difference.
pub fn find_plateau(matrix: &[(u64, Vec<Option<f64>>)]) -> Result<PlateauResult, StatsError> {
    if matrix.len() < 3 {
        return Err(StatsError::TooFew { need: 3, got: matrix.len() });
    }
    for w in matrix.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(StatsError::UnsortedSteps { prev: w[0].0, next: w[1].0 });
        }
    }
    'outer: for (i, (step, scores)) in matrix[..matrix.len() - 1].iter().enumerate() {
        for (later_step, later) in &matrix[i + 1..] {
            let significant = match paired_ttest(&step.to_string(), scores, &later_step.to_string(), later) {
                Ok(cmp) => cmp.stars.significant(),
                Err(StatsError::DegenerateDifferences) => true,
                Err(e) => return Err(e),
            };
            if significant {
                continue 'outer;
            }
        }
        return Ok(PlateauResult { plateau_step: *step, plateaued: true, note: PLATEAU_METHOD.to_string() });
    }
    let last = matrix[matrix.len() - 1].0;
    Ok(PlateauResult { plateau_step: last, plateaued: false, note: NO_PLATEAU_NOTE.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_checkpoints() {
        let row = vec![Some(0.3), Some(0.5), Some(0.9)];
        let m = vec![(100, row.clone()), (200, row.clone()), (300, row)];
        let r = find_plateau(&m).unwrap();
        assert_eq!((r.plateau_step, r.plateaued), (100, true));
    }

    #[test]
    fn steady_large_gains() {
        // each checkpoint adds 1.0 (+ small task jitter) to every task
        let jitter = [0.0, 0.01, -0.01, 0.02, -0.02, 0.005];
        let m: Vec<(u64, Vec<Option<f64>>)> = (0..5)
            .map(|c| {
                let scores = jitter.iter().enumerate().map(|(t, j)| Some(c as f64 + j * (c as f64 + t as f64))).collect();
                ((c + 1) * 1000, scores)
            })
            .collect();
        let r = find_plateau(&m).unwrap();
        assert_eq!((r.plateau_step, r.plateaued), (5000, false));
        assert_eq!(r.note, NO_PLATEAU_NOTE);
    }

    #[test]
    fn too_few_checkpoints() {
        let m = vec![(1, vec![Some(0.1), Some(0.2)]), (2, vec![Some(0.1), Some(0.2)])];
        assert!(find_plateau(&m).is_err());
    }
}
