//! Grounding, delete-relaxation heuristics, forward search and plan
//! validation for STRIPS tasks compiled from models.
//!
//! ```
//! use hrrt_core::fixtures;
//! use hrrt_core::planner::{ground, solve, validate, Limits, Strategy, DEFAULT_MAX_GROUND_ACTIONS};
//!
//! let task = ground(&fixtures::door_domain(), &fixtures::door_task(), DEFAULT_MAX_GROUND_ACTIONS).unwrap();
//! let plan = solve(&task, Strategy::Bfs, Limits::default()).plan().cloned().unwrap();
//! assert_eq!(plan.to_text(), "; length=2\n(pound-door robbie front)\n(open-door robbie front)\n");
//! assert!(validate(&task, &plan).is_ok());
//! ```

mod heuristics;
mod plan;
mod search;
mod task;

pub use heuristics::{h_add, h_max, RelaxedGraph};
pub use plan::{validate, validate_on_model, Plan, PlanDiagnostic, PlanParseError};
pub use search::{oracle_shortest_length, solve, Limits, SolveOutcome, Strategy};
pub use task::{ground, BitSet, GroundTask, GroundingError, StripsAction, DEFAULT_MAX_GROUND_ACTIONS};

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{goal_from, ActionRef, State};

    pub(crate) fn delivery_task() -> GroundTask {
        ground(&fixtures::delivery_domain(), &fixtures::delivery_task(), DEFAULT_MAX_GROUND_ACTIONS).unwrap()
    }

    #[test]
    fn goal_in_init_gives_empty_plan() {
        let d = fixtures::door_domain();
        let mut spec = fixtures::door_task();
        spec.goal = goal_from(&["(door-locked front)"]);
        let t = ground(&d, &spec, DEFAULT_MAX_GROUND_ACTIONS).unwrap();
        for s in Strategy::ALL {
            let p = solve(&t, s, Limits::default()).plan().cloned().unwrap();
            assert!(p.is_empty());
            assert!(validate(&t, &p).is_ok());
        }
    }

    #[test]
    fn unreachable_goal_unsolvable() {
        let d = fixtures::delivery_domain();
        let mut spec = fixtures::delivery_task();
        spec.goal = goal_from(&["(adjacent l1 l3)"]);
        let t = ground(&d, &spec, DEFAULT_MAX_GROUND_ACTIONS).unwrap();
        for s in Strategy::ALL {
            assert_eq!(solve(&t, s, Limits::default()), SolveOutcome::Unsolvable, "{s}");
        }
    }

    #[test]
    fn negative_goal_compiled() {
        let d = fixtures::door_domain();
        let mut spec = fixtures::door_task();
        spec.goal = goal_from(&["(not (hands-free robbie))"]);
        let t = ground(&d, &spec, DEFAULT_MAX_GROUND_ACTIONS).unwrap();
        assert_eq!(solve(&t, Strategy::Bfs, Limits::default()), SolveOutcome::Unsolvable);
        spec.init = State::from_atoms(["(at-door robbie front)"]);
        let t = ground(&d, &spec, DEFAULT_MAX_GROUND_ACTIONS).unwrap();
        assert_eq!(solve(&t, Strategy::Bfs, Limits::default()).plan().map(Plan::len), Some(0));
    }

    #[test]
    fn failing_step_diagnosed() {
        let t = delivery_task();
        let plan = Plan::new(vec!["(unload pkg l3)".parse::<ActionRef>().unwrap()]);
        let err = validate(&t, &plan).unwrap_err();
        assert_eq!(err.step, 1);
        assert!(validate(&t, &Plan::default()).is_err());
    }

    #[test]
    fn plan_text_round_trip() {
        let t = delivery_task();
        let p = solve(&t, Strategy::AstarHmax, Limits::default()).plan().cloned().unwrap();
        let text = p.to_text();
        assert!(text.starts_with("; length=4\n"));
        assert_eq!(Plan::from_text(&text).unwrap(), p);
        assert!(validate_on_model(&fixtures::delivery_domain(), &fixtures::delivery_task(), &p).is_ok());
    }

    #[test]
    fn repeated_solves_identical() {
        let t = delivery_task();
        for s in Strategy::ALL {
            assert_eq!(solve(&t, s, Limits::default()), solve(&t, s, Limits::default()));
        }
    }
}
