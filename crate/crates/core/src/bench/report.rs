use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::LevelTag;

pub const CSV_HEADER: &str = "hypothesis_id,iteration,level,solved,total,rate,unsolvable,resource_limit,invalid_model";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub hypothesis_id: String,
    pub iteration: u32,
    pub level: LevelTag,
    pub solved: usize,
    pub total: usize,
    pub rate: f64,
    pub unsolvable: usize,
    pub resource_limit: usize,
    pub invalid_model: usize,
}

impl ReportRow {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        hypothesis_id: &str,
        iteration: u32,
        level: LevelTag,
        solved: usize,
        total: usize,
        unsolvable: usize,
        resource_limit: usize,
        invalid_model: usize,
    ) -> Self {
        ReportRow {
            hypothesis_id: hypothesis_id.to_string(),
            iteration,
            level,
            solved,
            total,
            rate: rate(solved, total),
            unsolvable,
            resource_limit,
            invalid_model,
        }
    }

    /// Every task is accounted for exactly once.
    pub fn is_consistent(&self) -> bool {
        self.solved + self.unsolvable + self.resource_limit + self.invalid_model == self.total
            && self.rate == rate(self.solved, self.total)
    }
}

/// Success rate; an empty batch has rate 0.
pub fn rate(solved: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        solved as f64 / total as f64
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuccessReport {
    pub batch_id: String,
    pub rows: Vec<ReportRow>,
    /// Saturation iteration of the evaluated post-H4 chain, when detected.
    #[serde(default)]
    pub saturation: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub iteration: u32,
    pub rate: f64,
}

/// Chart data written next to a report as `series.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub batch_id: String,
    /// Seed (iteration 0) followed by the post-H4 hypothesis of each iteration.
    pub success: Vec<SeriesPoint>,
    /// One series per level tag, iterations 1 and up.
    pub ablation: BTreeMap<LevelTag, Vec<SeriesPoint>>,
    pub saturation: Option<u32>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("iteration {iteration} has no {level} hypothesis in the report")]
    MissingLevelHypothesis { iteration: u32, level: LevelTag },
}

impl SuccessReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.4},{},{},{}",
                r.hypothesis_id,
                r.iteration,
                r.level.as_str(),
                r.solved,
                r.total,
                r.rate,
                r.unsolvable,
                r.resource_limit,
                r.invalid_model
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        crate::model::canonical::to_canonical_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<16}  {:>4}  {:<7}  {:>6}  {:>5}  {:>6}  {:>10}  {:>8}  {:>7}\n",
            "hypothesis", "iter", "level", "solved", "total", "rate", "unsolvable", "limit", "invalid"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<16}  {:>4}  {:<7}  {:>6}  {:>5}  {:>6.4}  {:>10}  {:>8}  {:>7}",
                r.hypothesis_id,
                r.iteration,
                r.level.as_str(),
                r.solved,
                r.total,
                r.rate,
                r.unsolvable,
                r.resource_limit,
                r.invalid_model
            );
        }
        let (solved, total) = self.totals();
        let _ = writeln!(out, "TOTAL {solved}/{total} = {:.4}", rate(solved, total));
        out
    }

    /// Solved and total tasks summed over all rows.
    pub fn totals(&self) -> (usize, usize) {
        self.rows.iter().fold((0, 0), |(s, t), r| (s + r.solved, t + r.total))
    }

    fn row(&self, iteration: u32, level: LevelTag) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.iteration == iteration && r.level == level)
    }

    /// Success rate of the seed and of each post-H4 hypothesis by iteration.
    pub fn saturation_series(&self) -> Vec<SeriesPoint> {
        let mut points: Vec<SeriesPoint> = self
            .rows
            .iter()
            .filter(|r| matches!(r.level, LevelTag::Seed | LevelTag::PostH4))
            .map(|r| SeriesPoint { iteration: r.iteration, rate: r.rate })
            .collect();
        points.sort_by_key(|p| p.iteration);
        points
    }

    /// Per-level series over every iteration that has a post-H2, post-H3 or
    /// post-H4 row; each such iteration must have all three.
    pub fn ablation_series(&self) -> Result<BTreeMap<LevelTag, Vec<SeriesPoint>>, SeriesError> {
        let levels = [LevelTag::PostH2, LevelTag::PostH3, LevelTag::PostH4];
        let mut iterations: Vec<u32> =
            self.rows.iter().filter(|r| levels.contains(&r.level)).map(|r| r.iteration).collect();
        iterations.sort_unstable();
        iterations.dedup();
        let mut out = BTreeMap::new();
        for level in levels {
            let mut points = Vec::new();
            for &i in &iterations {
                let r = self.row(i, level).ok_or(SeriesError::MissingLevelHypothesis { iteration: i, level })?;
                points.push(SeriesPoint { iteration: i, rate: r.rate });
            }
            out.insert(level, points);
        }
        Ok(out)
    }

    pub fn series(&self) -> Result<Series, SeriesError> {
        Ok(Series {
            batch_id: self.batch_id.clone(),
            success: self.saturation_series(),
            ablation: self.ablation_series()?,
            saturation: self.saturation,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, i: u32, level: LevelTag, solved: usize) -> ReportRow {
        ReportRow::new(id, i, level, solved, 50, 50 - solved, 0, 0)
    }

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(SuccessReport::default().to_csv(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn json_round_trip() {
        let r = SuccessReport { batch_id: "b".into(), rows: vec![row("h", 1, LevelTag::PostH4, 49)], saturation: None };
        assert_eq!(SuccessReport::from_json(&r.to_json()).unwrap(), r);
        assert_eq!(r.to_csv().lines().nth(1).unwrap(), "h,1,post-h4,49,50,0.9800,1,0,0");
    }

    #[test]
    fn aggregate_matches_row_sums() {
        let solved = [49, 43, 50, 44, 46, 47, 32, 39];
        let r = SuccessReport {
            batch_id: "b".into(),
            rows: solved.iter().enumerate().map(|(i, &s)| row(&format!("d{i}"), 1, LevelTag::PostH4, s)).collect(),
            saturation: None,
        };
        assert!(r.rows.iter().all(ReportRow::is_consistent));
        assert_eq!(r.totals(), (350, 400));
        assert_eq!(rate(350, 400), 0.875);
        assert!(r.to_table().ends_with("TOTAL 350/400 = 0.8750\n"));
    }

    #[test]
    fn ablation_requires_every_level() {
        let mut r = SuccessReport {
            batch_id: "b".into(),
            rows: vec![row("s", 0, LevelTag::Seed, 10), row("a", 1, LevelTag::PostH2, 10), row("b", 1, LevelTag::PostH3, 20)],
            saturation: None,
        };
        assert_eq!(
            r.ablation_series(),
            Err(SeriesError::MissingLevelHypothesis { iteration: 1, level: LevelTag::PostH4 })
        );
        r.rows.push(row("c", 1, LevelTag::PostH4, 30));
        let s = r.series().unwrap();
        assert_eq!(s.success.len(), 2);
        assert_eq!(s.ablation[&LevelTag::PostH3][0].rate, 0.4);
    }
}
