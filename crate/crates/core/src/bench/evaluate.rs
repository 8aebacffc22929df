use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::TaskBatch;
use super::report::{ReportRow, SuccessReport};
use crate::hrrt::detect_saturation;
use crate::model::{GroundTaskSpec, LevelTag, ModelHypothesis};
use crate::planner::{ground, solve, validate_on_model, Limits, SolveOutcome, Strategy, DEFAULT_MAX_GROUND_ACTIONS};

/// Planner settings for a benchmark run. Without an explicit strategy, greedy
/// best-first search runs first and A* with h_max is the fallback.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannerConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    pub limits: Limits,
    pub max_ground_actions: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            strategy: None,
            limits: Limits::expansions(200_000),
            max_ground_actions: DEFAULT_MAX_GROUND_ACTIONS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskOutcome {
    Solved,
    Unsolvable,
    ResourceLimit,
    InvalidModel,
}

/// Runs one task against one hypothesis. Tasks whose atoms the hypothesis
/// cannot express are invalid for it; a plan only counts once it validates
/// on the model itself.
pub fn run_task(h: &ModelHypothesis, task: &GroundTaskSpec, cfg: &PlannerConfig) -> TaskOutcome {
    if task.check(&h.domain).is_err() {
        return TaskOutcome::InvalidModel;
    }
    let Ok(g) = ground(&h.domain, task, cfg.max_ground_actions) else {
        return TaskOutcome::ResourceLimit;
    };
    let strategies: &[Strategy] = match cfg.strategy {
        Some(s) => &[s][..],
        None => &[Strategy::GbfsHadd, Strategy::AstarHmax][..],
    };
    let mut last = TaskOutcome::Unsolvable;
    for &s in strategies {
        last = match solve(&g, s, cfg.limits) {
            SolveOutcome::Solved(plan) => {
                if validate_on_model(&h.domain, task, &plan).is_ok() {
                    return TaskOutcome::Solved;
                }
                TaskOutcome::Unsolvable
            }
            SolveOutcome::Unsolvable => TaskOutcome::Unsolvable,
            SolveOutcome::ResourceLimit { .. } => TaskOutcome::ResourceLimit,
        };
    }
    last
}

/// Evaluates every hypothesis on every task of the batch. Evaluations run in
/// parallel; rows keep the order of `hypotheses`. An empty batch evaluates
/// nothing and yields no rows.
pub fn evaluate(hypotheses: &[ModelHypothesis], batch: &TaskBatch, cfg: &PlannerConfig) -> SuccessReport {
    if batch.tasks.is_empty() {
        return SuccessReport { batch_id: batch.id.clone(), rows: Vec::new(), saturation: None };
    }
    let jobs: Vec<(usize, usize)> =
        (0..hypotheses.len()).flat_map(|h| (0..batch.tasks.len()).map(move |t| (h, t))).collect();
    let outcomes: Vec<TaskOutcome> =
        jobs.par_iter().map(|&(h, t)| run_task(&hypotheses[h], &batch.tasks[t], cfg)).collect();

    let rows = hypotheses
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let mine = &outcomes[i * batch.tasks.len()..(i + 1) * batch.tasks.len()];
            let count = |o: TaskOutcome| mine.iter().filter(|x| **x == o).count();
            ReportRow::new(
                &h.id,
                h.iteration,
                h.level,
                count(TaskOutcome::Solved),
                batch.tasks.len(),
                count(TaskOutcome::Unsolvable),
                count(TaskOutcome::ResourceLimit),
                count(TaskOutcome::InvalidModel),
            )
        })
        .collect();

    let chain: Vec<ModelHypothesis> = hypotheses
        .iter()
        .filter(|h| matches!(h.level, LevelTag::Seed | LevelTag::PostH4))
        .cloned()
        .collect();
    SuccessReport {
        batch_id: batch.id.clone(),
        rows,
        saturation: detect_saturation(&chain),
    }
}
