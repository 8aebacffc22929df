use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ground::{ground_actions, ground_atoms};
use crate::model::{ActionRef, Domain, ObjectTable, State};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Judgment {
    Unjudged,
    Valid,
    Invalid,
    Unlikely,
}

impl Judgment {
    /// Reads a blue-team answer; anything unrecognised stays unjudged.
    pub fn from_answer(answer: &str) -> Judgment {
        match answer.trim().to_ascii_lowercase().as_str() {
            "valid" | "yes" => Judgment::Valid,
            "invalid" | "no" => Judgment::Invalid,
            "unlikely" => Judgment::Unlikely,
            _ => Judgment::Unjudged,
        }
    }

    pub fn needs_attention(self) -> bool {
        matches!(self, Judgment::Invalid | Judgment::Unlikely)
    }
}

/// Transition `(state, action, next_state)` supported by the model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Possibility {
    pub state: State,
    pub action: ActionRef,
    pub next_state: State,
    pub judgment: Judgment,
    #[serde(default)]
    pub note: String,
}

impl Possibility {
    pub fn render(&self) -> String {
        format!("{} --{}--> {}", self.state, self.action, self.next_state)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PossibilitySet {
    pub items: Vec<Possibility>,
    /// True when the cap cut the enumeration short.
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationConfig {
    pub depth: usize,
    pub cap: usize,
    /// Enumerate over every subset of ground atoms at depth one instead of
    /// searching forward from the roots.
    pub exhaustive: bool,
}

impl Default for EnumerationConfig {
    fn default() -> Self {
        EnumerationConfig { depth: 4, cap: 256, exhaustive: false }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnumerationError {
    #[error("invalid root state: {0}")]
    InvalidRoot(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("exhaustive enumeration over {0} ground atoms is too large (limit 20)")]
    TooManyAtoms(usize),
}

const EXHAUSTIVE_ATOM_LIMIT: usize = 20;

/// Bounded breadth-first enumeration of transitions reachable from `roots`.
///
/// States within a layer are visited in canonical order and ground actions in
/// schema/argument order, so the output order is deterministic.
pub fn enumerate_possibilities(
    domain: &Domain,
    roots: &[State],
    cfg: &EnumerationConfig,
) -> Result<PossibilitySet, EnumerationError> {
    if cfg.cap == 0 {
        return Err(EnumerationError::InvalidConfig("cap must be at least 1".into()));
    }
    let objects = ObjectTable::from_domain(domain);
    let actions = ground_actions(domain, &objects);

    let (mut frontier, depth): (BTreeSet<State>, usize) = if cfg.exhaustive {
        let atoms = ground_atoms(domain, &objects);
        if atoms.len() > EXHAUSTIVE_ATOM_LIMIT {
            return Err(EnumerationError::TooManyAtoms(atoms.len()));
        }
        let all = (0u32..1 << atoms.len())
            .map(|mask| {
                State(
                    atoms
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, a)| a.clone())
                        .collect(),
                )
            })
            .collect();
        (all, 1)
    } else {
        for root in roots {
            for atom in root.iter() {
                objects.check_atom(domain, atom).map_err(EnumerationError::InvalidRoot)?;
            }
        }
        (roots.iter().cloned().collect(), cfg.depth)
    };

    let mut out = PossibilitySet::default();
    let mut visited: BTreeSet<State> = frontier.clone();
    for _ in 0..depth {
        let mut next_frontier = BTreeSet::new();
        for state in &frontier {
            for action in actions.iter().filter(|a| a.applicable(state)) {
                if out.items.len() == cfg.cap {
                    out.truncated = true;
                    return Ok(out);
                }
                let next = action.apply(state);
                out.items.push(Possibility {
                    state: state.clone(),
                    action: action.action.clone(),
                    next_state: next.clone(),
                    judgment: Judgment::Unjudged,
                    note: String::new(),
                });
                if visited.insert(next.clone()) {
                    next_frontier.insert(next);
                }
            }
        }
        frontier = next_frontier;
        if frontier.is_empty() {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{ActionSchema, PredicateDecl};

    #[test]
    fn no_actions_no_possibilities() {
        let mut d = fixtures::lunar_seed();
        d.actions.clear();
        let roots = d.initial_templates.clone();
        assert!(enumerate_possibilities(&d, &roots, &EnumerationConfig::default()).unwrap().items.is_empty());
    }

    #[test]
    fn unreachable_precondition() {
        let mut d = Domain::new("tiny");
        d.predicates.push(PredicateDecl::new("p", &[]));
        d.predicates.push(PredicateDecl::new("q", &[]));
        d.actions.push(ActionSchema::new("a", &[]).pre("(p)").adds("(q)"));
        let roots = vec![State::new()];
        let set = enumerate_possibilities(&d, &roots, &EnumerationConfig::default()).unwrap();
        assert!(set.items.is_empty());
        assert!(!set.truncated);
    }

    #[test]
    fn depth_zero_and_cap() {
        let d = fixtures::lunar_seed();
        let roots = d.initial_templates.clone();
        let zero = EnumerationConfig { depth: 0, ..Default::default() };
        assert!(enumerate_possibilities(&d, &roots, &zero).unwrap().items.is_empty());
        let capped = EnumerationConfig { depth: 10, cap: 2, exhaustive: false };
        let set = enumerate_possibilities(&d, &roots, &capped).unwrap();
        assert_eq!(set.items.len(), 2);
        assert!(set.truncated);
    }

    #[test]
    fn invalid_root_rejected() {
        let d = fixtures::lunar_seed();
        let roots = vec![State::from_atoms(["(at-external-door nobody)"])];
        assert!(matches!(
            enumerate_possibilities(&d, &roots, &EnumerationConfig::default()),
            Err(EnumerationError::InvalidRoot(_))
        ));
    }

    #[test]
    fn transitions_follow_add_and_delete_effects() {
        let d = fixtures::lunar_seed();
        let set = enumerate_possibilities(&d, &d.initial_templates, &EnumerationConfig::default()).unwrap();
        assert!(!set.items.is_empty());
        let objects = ObjectTable::from_domain(&d);
        for p in &set.items {
            let g = crate::model::ground::resolve_action(&d, &objects, &p.action).unwrap();
            assert!(g.applicable(&p.state));
            assert_eq!(g.apply(&p.state), p.next_state);
        }
    }
}
