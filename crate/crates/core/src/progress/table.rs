use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::anova::{anova, AnovaResult};
use super::plateau::{find_plateau, PlateauResult};
use super::rank::{spearman, CheckpointSeries, CorrelationResult};
use super::ttest::{paired_ttest, PairwiseComparison};
use super::StatsError;

/// Scores with tasks as rows and checkpoints or models as columns.
///
/// Empty cells and `-` mark missing scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub columns: Vec<String>,
    pub tasks: Vec<String>,
    /// `scores[task][column]`
    pub scores: Vec<Vec<Option<f64>>>,
}

impl ScoreTable {
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, StatsError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(reader);
        let header = rdr.headers().map_err(|e| StatsError::Table(e.to_string()))?.clone();
        if header.len() < 2 {
            return Err(StatsError::Table("need a task column and at least one score column".into()));
        }
        let columns: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
        let mut tasks = Vec::new();
        let mut scores = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| StatsError::Table(e.to_string()))?;
            tasks.push(rec.get(0).unwrap_or_default().trim().to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|cell| parse_cell(cell).map_err(|m| StatsError::Table(format!("row {}: {m}", i + 2))))
                .collect::<Result<Vec<_>, _>>()?;
            scores.push(row);
        }
        Ok(Self { columns, tasks, scores })
    }

    pub fn column(&self, j: usize) -> Vec<Option<f64>> {
        self.scores.iter().map(|row| row[j]).collect()
    }

    /// Training steps parsed from the column headers, if every header ends in digits.
    pub fn steps(&self) -> Option<Vec<u64>> {
        self.columns.iter().map(|c| parse_step(c)).collect()
    }

    /// Score series of one task over checkpoints, skipping missing cells.
    pub fn series(&self, task: usize) -> Result<CheckpointSeries, StatsError> {
        let steps = self.steps().ok_or_else(|| StatsError::Table("column headers are not checkpoint steps".into()))?;
        let points = steps.iter().zip(&self.scores[task]).filter_map(|(s, v)| Some((*s, (*v)?))).collect();
        CheckpointSeries::new(self.tasks[task].clone(), points)
    }

    pub fn analyze(&self) -> ProgressReport {
        let steps = self.steps();
        let mut trends = Vec::new();
        if steps.is_some() {
            for t in 0..self.tasks.len() {
                let outcome = self.series(t).and_then(|s| spearman(&s));
                trends.push(TaskTrend::from_outcome(&self.tasks[t], outcome));
            }
        }
        let groups: Vec<Vec<f64>> =
            (0..self.columns.len()).map(|j| self.column(j).into_iter().flatten().collect()).collect();
        let anova = anova(&groups).map_err(|e| e.to_string());
        let mut pairwise = Vec::new();
        let mut skipped_pairs = Vec::new();
        for i in 0..self.columns.len() {
            for j in i + 1..self.columns.len() {
                match paired_ttest(&self.columns[i], &self.column(i), &self.columns[j], &self.column(j)) {
                    Ok(c) => pairwise.push(c),
                    Err(e) => skipped_pairs.push(SkippedPair {
                        a: self.columns[i].clone(),
                        b: self.columns[j].clone(),
                        reason: e.to_string(),
                    }),
                }
            }
        }
        let plateau = steps.map(|steps| {
            let matrix: Vec<(u64, Vec<Option<f64>>)> =
                steps.iter().enumerate().map(|(j, &s)| (s, self.column(j))).collect();
            find_plateau(&matrix).map_err(|e| e.to_string())
        });
        ProgressReport { columns: self.columns.clone(), tasks: self.tasks.len(), trends, anova, pairwise, skipped_pairs, plateau }
    }
}

fn parse_cell(cell: &str) -> Result<Option<f64>, String> {
    let cell = cell.trim();
    if cell.is_empty() || cell == "-" {
        return Ok(None);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(format!("not a score: {cell:?}")),
    }
}

fn parse_step(header: &str) -> Option<u64> {
    let digits: String = header.trim().chars().rev().take_while(|c| c.is_ascii_digit() || *c == '_').collect();
    let digits: String = digits.chars().rev().filter(|c| *c != '_').collect();
    digits.parse().ok()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskTrend {
    pub task: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spearman: Option<CorrelationResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TaskTrend {
    fn from_outcome(task: &str, outcome: Result<CorrelationResult, StatsError>) -> Self {
        match outcome {
            Ok(r) => Self { task: task.to_string(), spearman: Some(r), error: None },
            Err(e) => Self { task: task.to_string(), spearman: None, error: Some(e.to_string()) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub a: String,
    pub b: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressReport {
    pub columns: Vec<String>,
    pub tasks: usize,
    pub trends: Vec<TaskTrend>,
    pub anova: Result<AnovaResult, String>,
    pub pairwise: Vec<PairwiseComparison>,
    pub skipped_pairs: Vec<SkippedPair>,
    pub plateau: Option<Result<PlateauResult, String>>,
}

impl ProgressReport {
    /// CSV with columns `a,b,n,t,p,stars`.
    pub fn write_stars_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["a", "b", "n", "t", "p", "stars"])?;
        for c in &self.pairwise {
            w.write_record([&c.a, &c.b, &c.n.to_string(), &c.t.to_string(), &c.p.to_string(), c.stars.as_str()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE: &str = "task,step_1000,step_2000,step_3000,step_4000\n\
                         nli,0.40,0.45,0.50,0.52\n\
                         ner,0.60,-,0.65,0.70\n\
                         qa,0.30,0.31,,0.35\n";

    #[test]
    fn parses_missing_cells() {
        let t = ScoreTable::read_csv(TABLE.as_bytes()).unwrap();
        assert_eq!(t.columns.len(), 4);
        assert_eq!(t.steps(), Some(vec![1000, 2000, 3000, 4000]));
        assert_eq!(t.scores[1][1], None);
        assert_eq!(t.scores[2][2], None);
        assert_eq!(t.series(1).unwrap().points().len(), 3);
    }

    #[test]
    fn report_covers_all_pairs() {
        let t = ScoreTable::read_csv(TABLE.as_bytes()).unwrap();
        let r = t.analyze();
        assert_eq!(r.trends.len(), 3);
        assert_eq!(r.trends[0].spearman.unwrap().r, 1.0);
        assert_eq!(r.pairwise.len() + r.skipped_pairs.len(), 6);
        assert!(r.anova.is_ok());
        let mut csv = Vec::new();
        r.write_stars_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("a,b,n,t,p,stars\n"));
    }

    #[test]
    fn rejects_bad_cells() {
        assert!(ScoreTable::read_csv("task,a,b\nx,0.1,oops\n".as_bytes()).is_err());
    }
}
