use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::rng::{bernoulli, task_rng, uniform_index, RNG_ALGORITHM};
use crate::model::canonical::{short_hash, to_compact_string};
use crate::model::{GroundTaskSpec, ModelHypothesis};

pub const DEFAULT_INCLUSION_PROBABILITY: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskBatch {
    pub id: String,
    pub model_id: String,
    pub seed: u64,
    pub inclusion_probability: f64,
    pub rng: String,
    pub tasks: Vec<GroundTaskSpec>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenerateError {
    #[error("model {0} has no initial or goal templates")]
    NoTemplates(String),
    #[error("inclusion probability must lie in [0, 1]")]
    BadProbability,
}

pub fn generate_tasks(m: &ModelHypothesis, n: usize, seed: u64) -> Result<TaskBatch, GenerateError> {
    generate_tasks_with(m, n, seed, DEFAULT_INCLUSION_PROBABILITY)
}

/// Samples `n` tasks from the templates of `m`. Task `i` draws, in order: the
/// initial template, one inclusion bit per failure case (in model order), and
/// the goal template, all from its own stream.
pub fn generate_tasks_with(
    m: &ModelHypothesis,
    n: usize,
    seed: u64,
    inclusion_probability: f64,
) -> Result<TaskBatch, GenerateError> {
    if !(0.0..=1.0).contains(&inclusion_probability) {
        return Err(GenerateError::BadProbability);
    }
    let d = &m.domain;
    if n > 0 && (d.initial_templates.is_empty() || d.goal_templates.is_empty()) {
        return Err(GenerateError::NoTemplates(m.id.clone()));
    }
    let mut tasks = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = task_rng(seed, &m.id, i as u64);
        let mut init = d.initial_templates[uniform_index(&mut rng, d.initial_templates.len())].clone();
        let mut injected = Vec::new();
        for case in &d.failure_cases {
            if bernoulli(&mut rng, inclusion_probability) {
                case.inject(&mut init);
                injected.push(case.name.clone());
            }
        }
        let goal = d.goal_templates[uniform_index(&mut rng, d.goal_templates.len())].clone();
        let mut task = GroundTaskSpec::new(&format!("task-{i:04}"), init, goal);
        task.injected = injected;
        tasks.push(task);
    }
    let mut batch = TaskBatch {
        id: String::new(),
        model_id: m.id.clone(),
        seed,
        inclusion_probability,
        rng: RNG_ALGORITHM.to_string(),
        tasks,
    };
    batch.id = short_hash(to_compact_string(&batch).as_bytes());
    Ok(batch)
}
