//! Seeded failure-injected task batches, lineage evaluation and reports.
//!
//! ```
//! use hrrt_core::bench::{evaluate, generate_tasks, PlannerConfig};
//! use hrrt_core::fixtures;
//! use hrrt_core::model::ModelHypothesis;
//!
//! let seed = ModelHypothesis::seed(fixtures::lunar_seed());
//! let batch = generate_tasks(&seed, 10, 42).unwrap();
//! let report = evaluate(&[seed], &batch, &PlannerConfig::default());
//! assert_eq!(report.rows[0].solved, 10);
//! assert!(report.to_csv().starts_with("hypothesis_id,iteration,level,"));
//! ```

mod evaluate;
mod generate;
mod report;
pub mod rng;

pub use evaluate::{evaluate, run_task, PlannerConfig, TaskOutcome};
pub use generate::{generate_tasks, generate_tasks_with, GenerateError, TaskBatch, DEFAULT_INCLUSION_PROBABILITY};
pub use report::{rate, ReportRow, Series, SeriesError, SeriesPoint, SuccessReport, CSV_HEADER};
pub use rng::RNG_ALGORITHM;

use crate::model::{Lineage, LineageError, ModelHypothesis};

/// Every hypothesis from the seed to `head`, in lineage order.
pub fn lineage_hypotheses(lineage: &Lineage, head: &str) -> Result<Vec<ModelHypothesis>, LineageError> {
    Ok(lineage.chain(head)?.into_iter().cloned().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{Domain, FailureCase, LevelTag, Severity};

    #[test]
    fn empty_batch() {
        let m = ModelHypothesis::seed(fixtures::lunar_seed());
        let b = generate_tasks(&m, 0, 1).unwrap();
        assert!(b.tasks.is_empty());
        let r = evaluate(&[m], &b, &PlannerConfig::default());
        assert!(r.rows.is_empty());
        assert_eq!(r.to_csv(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn no_templates_rejected() {
        let m = ModelHypothesis::seed(Domain::new("bare"));
        assert!(matches!(generate_tasks(&m, 1, 1), Err(GenerateError::NoTemplates(_))));
    }

    #[test]
    fn no_failure_cases_means_verbatim_templates() {
        let m = ModelHypothesis::seed(fixtures::mars_seed());
        let b = generate_tasks(&m, 20, 7).unwrap();
        for t in &b.tasks {
            assert!(m.domain.initial_templates.contains(&t.init));
            assert!(m.domain.goal_templates.contains(&t.goal));
            assert!(t.injected.is_empty());
        }
    }

    #[test]
    fn regenerated_batch_is_identical_and_injection_rate_plausible() {
        let mut d = fixtures::lunar_seed();
        for i in 0..6 {
            d.predicates.push(crate::model::PredicateDecl::new(&format!("hazard-{i}"), &[]));
            d.failure_cases.push(FailureCase::new(&format!("case-{i}"), Severity::Low, &[&format!("(hazard-{i})")], &["abort"]));
        }
        let m = ModelHypothesis::seed(d.canonical());
        let a = generate_tasks(&m, 50, 42).unwrap();
        let b = generate_tasks(&m, 50, 42).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        // Binomial(300, 0.5): 99% two-sided bounds are about 150 +/- 22.3
        let injected: usize = a.tasks.iter().map(|t| t.injected.len()).sum();
        assert!((128..=172).contains(&injected), "{injected}");
        for t in &a.tasks {
            for name in &t.injected {
                assert!(m.domain.failure_case(name).unwrap().is_active(&t.init));
            }
        }
    }

    #[test]
    fn hypothesis_without_actions_solves_nothing() {
        let full = ModelHypothesis::seed(fixtures::lunar_seed());
        let mut d = fixtures::lunar_seed();
        d.actions.clear();
        let empty = ModelHypothesis::build(d, 1, LevelTag::PostH4, Some(full.id.clone()));
        let b = generate_tasks(&full, 10, 3).unwrap();
        let r = evaluate(&[full, empty], &b, &PlannerConfig::default());
        assert_eq!(r.rows[0].rate, 1.0);
        assert_eq!(r.rows[1].rate, 0.0);
        assert_eq!(r.rows[1].unsolvable, 10);
    }

    #[test]
    fn unknown_symbols_count_as_invalid_model() {
        let seed = ModelHypothesis::seed(fixtures::lunar_seed());
        let mut d = fixtures::lunar_seed();
        d.predicates.push(crate::model::PredicateDecl::new("storm", &[]));
        d.failure_cases.push(FailureCase::new("storm", Severity::High, &["(storm)"], &["abort"]));
        let later = ModelHypothesis::build(d.canonical(), 1, LevelTag::PostH4, Some(seed.id.clone()));
        let b = generate_tasks_with(&later, 5, 9, 1.0).unwrap();
        let r = evaluate(&[seed, later], &b, &PlannerConfig::default());
        assert_eq!(r.rows[0].invalid_model, 5);
        assert_eq!(r.rows[1].solved, 5);
    }
}
