//! PDDL emission and parsing (STRIPS with `:typing`).
//!
//! ```
//! use hrrt_core::{fixtures, pddl};
//!
//! let domain = fixtures::lunar_seed();
//! let text = pddl::emit_domain(&domain).unwrap();
//! assert!(text.starts_with("(define (domain lunar-habitat)"));
//! assert_eq!(pddl::parse_domain(&text).unwrap(), domain.planning_projection());
//! ```

mod emit;
mod parse;
pub mod sexpr;

use thiserror::Error;

pub use emit::{
    compile_domain, compile_task, compiled_init, complement_name, complemented_predicates, emit_domain, emit_problem,
    COMPLEMENT_PREFIX,
};
pub use parse::{parse_domain, parse_problem, SUPPORTED_REQUIREMENTS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PddlError {
    #[error("lex error at line {line}, column {col}: {message}")]
    Lex { line: usize, col: usize, message: String },
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("unsupported requirement `{requirement}` at line {line}, column {col}")]
    UnsupportedRequirement { line: usize, col: usize, requirement: String },
    #[error("unresolved reference: {0}")]
    UnresolvedReference(String),
    #[error("unsupported construct: {0}")]
    UnsupportedConstruct(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{goal_from, Domain, GroundTaskSpec, State};

    #[test]
    fn empty_model_emits_valid_domain() {
        let d = Domain::new("empty");
        let text = emit_domain(&d).unwrap();
        assert_eq!(text, "(define (domain empty)\n  (:requirements :strips :typing)\n  (:predicates)\n)\n");
        assert_eq!(parse_domain(&text).unwrap(), d);
    }

    #[test]
    fn no_negation_no_complements() {
        let d = fixtures::lunar_seed();
        assert!(complemented_predicates(&d).is_empty());
        assert!(!emit_domain(&d).unwrap().contains("(not-"));
    }

    #[test]
    fn complement_is_maintained_by_every_effect() {
        let d = fixtures::door_domain();
        let text = emit_domain(&d).unwrap();
        assert!(text.contains("(not-door-open ?d - door)"));
        let compiled = compile_domain(&d, &complemented_predicates(&d));
        for a in &compiled.actions {
            for x in a.add.iter().filter(|x| x.predicate == "door-open") {
                assert!(a.delete.iter().any(|y| y.predicate == "not-door-open" && y.args == x.args), "{}", a.name);
            }
            for x in a.delete.iter().filter(|x| x.predicate == "door-open") {
                assert!(a.add.iter().any(|y| y.predicate == "not-door-open" && y.args == x.args), "{}", a.name);
            }
            assert!(a.precondition.iter().all(|l| l.positive));
        }
        assert_eq!(parse_domain(&text).unwrap(), d.planning_projection());
    }

    #[test]
    fn round_trip_bundled_fixtures() {
        for (_, d) in fixtures::all_seed_domains() {
            let text = emit_domain(&d).unwrap();
            assert_eq!(parse_domain(&text).unwrap(), d.planning_projection());
            assert_eq!(emit_domain(&parse_domain(&text).unwrap()).unwrap(), text);
        }
    }

    #[test]
    fn durative_actions_rejected() {
        let text = "(define (domain d)\n  (:requirements :strips :durative-actions))";
        assert!(matches!(
            parse_domain(text),
            Err(PddlError::UnsupportedRequirement { line: 2, requirement, .. }) if requirement == ":durative-actions"
        ));
    }

    #[test]
    fn problem_round_trip_and_errors() {
        let d = fixtures::door_domain();
        let task = fixtures::door_task();
        let text = emit_problem(&d, &task).unwrap();
        let back = parse_problem(&text, &d).unwrap();
        assert_eq!(back.init, task.init);
        assert_eq!(back.goal, task.goal);
        assert_eq!(back.objects, task.objects);

        let mut bad = task.clone();
        bad.init = State::from_atoms(["(door-open nowhere)"]);
        assert!(matches!(emit_problem(&d, &bad), Err(PddlError::UnresolvedReference(_))));

        let trivial = GroundTaskSpec::new("t", State::from_atoms(["(door-open front)"]), goal_from(&["(door-open front)"]));
        let mut trivial = trivial;
        trivial.objects = task.objects.clone();
        assert!(emit_problem(&d, &trivial).unwrap().contains("(:goal (door-open front))"));
    }
}
