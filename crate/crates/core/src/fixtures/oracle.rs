//! Reference implementations that the analyses and planners are checked
//! against. They are slow and only meant for small models.

use std::collections::{BTreeSet, VecDeque};

use super::random::action_instances;
use crate::model::ground::{ground_actions, ground_atoms};
use crate::model::{Atom, Domain, GroundAtom, GroundTaskSpec, ObjectTable, State, Term};

/// Every `(state, action, successor)` over all subsets of the ground atoms,
/// computed straight from the schemas by substituting arguments. The action
/// is rendered as `(name arg...)`.
pub fn brute_force_transitions(d: &Domain) -> BTreeSet<(State, String, State)> {
    let atoms = ground_atoms(d, &ObjectTable::from_domain(d));
    assert!(atoms.len() < 24, "too many ground atoms for brute force");
    let mut out = BTreeSet::new();
    for mask in 0u32..1 << atoms.len() {
        let s: BTreeSet<GroundAtom> =
            atoms.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, a)| a.clone()).collect();
        for (name, args) in action_instances(d) {
            let schema = d.action(&name).expect("instance of a declared action");
            let sub = |a: &Atom| GroundAtom {
                predicate: a.predicate.clone(),
                args: a
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => args[schema.params.iter().position(|p| p.name() == v).expect("bound")].clone(),
                        Term::Const(c) => c.clone(),
                    })
                    .collect(),
            };
            if !schema.precondition.iter().all(|l| s.contains(&sub(&l.atom)) == l.positive) {
                continue;
            }
            let mut n = s.clone();
            for a in &schema.delete {
                n.remove(&sub(a));
            }
            for a in &schema.add {
                n.insert(sub(a));
            }
            let action = std::iter::once(name.clone()).chain(args.iter().cloned()).collect::<Vec<_>>().join(" ");
            out.insert((State(s.clone()), format!("({action})"), State(n)));
        }
    }
    out
}

/// Shortest plan length by breadth-first search over model states, using the
/// model's own negative preconditions and goals. `Some(None)` means
/// unsolvable; `None` means more than `cap` states were seen.
pub fn shortest_plan_length(d: &Domain, task: &GroundTaskSpec, cap: usize) -> Option<Option<usize>> {
    let actions = ground_actions(d, &task.object_table(d));
    let mut seen = BTreeSet::from([task.init.clone()]);
    let mut queue = VecDeque::from([(task.init.clone(), 0usize)]);
    while let Some((s, depth)) = queue.pop_front() {
        if s.satisfies(&task.goal) {
            return Some(Some(depth));
        }
        for a in actions.iter().filter(|a| a.applicable(&s)) {
            let n: State = a.apply(&s);
            if seen.insert(n.clone()) {
                if seen.len() > cap {
                    return None;
                }
                queue.push_back((n, depth + 1));
            }
        }
    }
    Some(None)
}
