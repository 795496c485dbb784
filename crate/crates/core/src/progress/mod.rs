//! Statistics over checkpoint score tables: Spearman trend tests, one-way
//! ANOVA, paired t-tests with significance stars and plateau detection.
//!
//! No statistics crate is involved; tail probabilities come from the
//! incomplete beta function in [`special`].

mod anova;
mod plateau;
mod rank;
pub mod special;
mod table;
mod ttest;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use anova::{anova, AnovaResult};
pub use plateau::{find_plateau, PlateauResult};
pub use rank::{average_ranks, spearman, spearman_xy, CheckpointSeries, CorrelationResult, PValueMethod};
pub use table::{ProgressReport, ScoreTable};
pub use ttest::{paired_ttest, pooled_ttest, PairwiseComparison, TTest};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {need} observations, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("{0} has zero variance; correlation undefined")]
    ZeroVariance(&'static str),
    #[error("paired differences are constant and non-zero; t statistic undefined")]
    DegenerateDifferences,
    #[error("steps must be strictly increasing (saw {prev} then {next})")]
    UnsortedSteps { prev: u64, next: u64 },
    #[error("input lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("score table: {0}")]
    Table(String),
}

/// Significance stars: `ns` p > 0.05, `*` ≤ 0.05, `**` ≤ 0.01, `***` ≤ 0.001, `****` ≤ 0.0001.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stars {
    #[serde(rename = "ns")]
    Ns,
    #[serde(rename = "*")]
    One,
    #[serde(rename = "**")]
    Two,
    #[serde(rename = "***")]
    Three,
    #[serde(rename = "****")]
    Four,
}

impl Stars {
    pub fn from_p(p: f64) -> Stars {
        if p <= 0.0001 {
            Stars::Four
        } else if p <= 0.001 {
            Stars::Three
        } else if p <= 0.01 {
            Stars::Two
        } else if p <= 0.05 {
            Stars::One
        } else {
            Stars::Ns
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stars::Ns => "ns",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
            Stars::Four => "****",
        }
    }

    pub fn significant(self) -> bool {
        self != Stars::Ns
    }
}

impl fmt::Display for Stars {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
