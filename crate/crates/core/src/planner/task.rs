use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::ground::{instantiate_with, tuple_count, typed_tuples};
use crate::model::{ActionRef, Domain, GroundAtom, GroundTaskSpec};
use crate::pddl::compile_task;

/// Fixed-width set of atom indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    pub fn new(width: usize) -> Self {
        BitSet { words: vec![0; width.div_ceil(64)] }
    }

    pub fn from_indices(width: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = BitSet::new(width);
        for i in indices {
            s.insert(i);
        }
        s
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn is_subset(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &bits)| {
            (0..64).filter(move |b| bits >> b & 1 == 1).map(move |b| w * 64 + b)
        })
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Ground STRIPS action over atom indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StripsAction {
    pub action: ActionRef,
    pub pre: Vec<usize>,
    pub add: Vec<usize>,
    pub del: Vec<usize>,
    pre_bits: BitSet,
    add_bits: BitSet,
    del_bits: BitSet,
}

impl StripsAction {
    fn new(action: ActionRef, width: usize, pre: Vec<usize>, add: Vec<usize>, del: Vec<usize>) -> Self {
        StripsAction {
            pre_bits: BitSet::from_indices(width, pre.iter().copied()),
            add_bits: BitSet::from_indices(width, add.iter().copied()),
            del_bits: BitSet::from_indices(width, del.iter().copied()),
            action,
            pre,
            add,
            del,
        }
    }

    pub fn applicable(&self, state: &BitSet) -> bool {
        self.pre_bits.is_subset(state)
    }

    pub fn apply(&self, state: &BitSet) -> BitSet {
        let mut words = state.words.clone();
        for ((w, d), a) in words.iter_mut().zip(&self.del_bits.words).zip(&self.add_bits.words) {
            *w = (*w & !d) | a;
        }
        BitSet { words }
    }
}

/// Grounded, compiled planning task.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTask {
    pub atoms: Vec<GroundAtom>,
    pub actions: Vec<StripsAction>,
    pub init: BitSet,
    pub goal: Vec<usize>,
    goal_bits: BitSet,
}

/// An action as `(reference, precondition, add, delete)` atom indices.
pub type IndexedAction = (ActionRef, Vec<usize>, Vec<usize>, Vec<usize>);

impl GroundTask {
    pub fn width(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_goal(&self, state: &BitSet) -> bool {
        self.goal_bits.is_subset(state)
    }

    pub fn atom_index(&self, atom: &GroundAtom) -> Option<usize> {
        self.atoms.binary_search(atom).ok()
    }

    pub fn action_index(&self, action: &ActionRef) -> Option<usize> {
        self.actions.binary_search_by(|a| a.action.cmp(action)).ok()
    }

    /// Builds a task directly from `(action, pre, add, del)` index sets; atoms must be sorted and
    /// actions sorted by reference. Used by tests and random generators.
    pub fn from_parts(
        atoms: Vec<GroundAtom>,
        actions: Vec<IndexedAction>,
        init: impl IntoIterator<Item = usize>,
        goal: Vec<usize>,
    ) -> Self {
        let width = atoms.len();
        let mut actions: Vec<StripsAction> = actions
            .into_iter()
            .map(|(r, pre, add, del)| {
                let del = del.into_iter().filter(|d| !add.contains(d)).collect();
                StripsAction::new(r, width, pre, add, del)
            })
            .collect();
        actions.sort_by(|a, b| a.action.cmp(&b.action));
        GroundTask {
            init: BitSet::from_indices(width, init),
            goal_bits: BitSet::from_indices(width, goal.iter().copied()),
            goal,
            atoms,
            actions,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroundingError {
    #[error("grounding would create {count} actions, above the limit of {limit}")]
    GroundingExplosion { count: u128, limit: usize },
    #[error("invalid task: {0}")]
    InvalidTask(String),
}

pub const DEFAULT_MAX_GROUND_ACTIONS: usize = 200_000;

/// Instantiates every schema over type-consistent objects, then keeps only
/// actions whose preconditions are reachable in the delete relaxation.
///
/// Atoms are numbered in sorted order and actions sorted by reference, so the
/// numbering depends only on the task.
pub fn ground(domain: &Domain, task: &GroundTaskSpec, max_actions: usize) -> Result<GroundTask, GroundingError> {
    task.check(domain).map_err(GroundingError::InvalidTask)?;
    let (cd, ct) = compile_task(domain, task);
    let objects = ct.object_table(&cd);
    let count: u128 = cd.actions.iter().map(|a| tuple_count(&cd, &objects, &a.params)).sum();
    if count > max_actions as u128 {
        return Err(GroundingError::GroundingExplosion { count, limit: max_actions });
    }
    let mut candidates = Vec::new();
    for schema in &cd.actions {
        for args in typed_tuples(&cd, &objects, &schema.params) {
            candidates.push(instantiate_with(schema, &args));
        }
    }

    // relaxed reachability fixpoint
    let mut reached: BTreeSet<GroundAtom> = ct.init.iter().cloned().collect();
    let mut fired = vec![false; candidates.len()];
    loop {
        let mut changed = false;
        for (i, a) in candidates.iter().enumerate() {
            if !fired[i] && a.pre_pos.iter().all(|p| reached.contains(p)) {
                fired[i] = true;
                changed = true;
                reached.extend(a.add.iter().cloned());
            }
        }
        if !changed {
            break;
        }
    }

    let mut table: BTreeSet<GroundAtom> = reached;
    table.extend(ct.goal.iter().map(|l| l.atom.clone()));
    let atoms: Vec<GroundAtom> = table.into_iter().collect();
    let index: BTreeMap<&GroundAtom, usize> = atoms.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let width = atoms.len();
    // predicates introduced by compilation are the complements
    let complements: BTreeSet<&str> =
        cd.predicates.iter().map(|p| p.name.as_str()).filter(|n| domain.predicate(n).is_none()).collect();

    let mut actions: Vec<StripsAction> = candidates
        .into_iter()
        .zip(fired)
        .filter(|(_, f)| *f)
        .map(|(a, _)| {
            let idx = |xs: &[GroundAtom]| {
                let mut v: Vec<usize> = xs.iter().filter_map(|x| index.get(x).copied()).collect();
                v.sort_unstable();
                v.dedup();
                v
            };
            let pre = idx(&a.pre_pos);
            let mut add = idx(&a.add);
            let mut del = idx(&a.delete);
            // An atom both added and deleted ends up true, so its complement
            // must end up false: add wins for model atoms, delete for complements.
            let both: Vec<usize> = add.iter().copied().filter(|x| del.contains(x)).collect();
            for x in both {
                if complements.contains(atoms[x].predicate.as_str()) {
                    add.retain(|&y| y != x);
                } else {
                    del.retain(|&y| y != x);
                }
            }
            StripsAction::new(a.action, width, pre, add, del)
        })
        .collect();
    actions.sort_by(|a, b| a.action.cmp(&b.action));

    let goal: Vec<usize> = ct.goal.iter().map(|l| index[&l.atom]).collect();
    Ok(GroundTask {
        init: BitSet::from_indices(width, ct.init.iter().filter_map(|a| index.get(a).copied())),
        goal_bits: BitSet::from_indices(width, goal.iter().copied()),
        goal,
        atoms,
        actions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{goal_from, ActionSchema, Constant, PredicateDecl, State, TypeDecl};

    fn one_param_domain() -> (Domain, GroundTaskSpec) {
        let mut d = Domain::new("tiny");
        d.types.push(TypeDecl::root("thing"));
        d.predicates.push(PredicateDecl::new("seen", &[("?x", "thing")]));
        d.predicates.push(PredicateDecl::new("ready", &[]));
        d.actions.push(ActionSchema::new("look", &[("?x", "thing")]).adds("(seen ?x)"));
        d.actions.push(ActionSchema::new("prepare", &[]).adds("(ready)"));
        let mut t = GroundTaskSpec::new("t", State::new(), goal_from(&["(seen a)"]));
        t.objects = ["a", "b", "c"].iter().map(|o| Constant::new(o, "thing")).collect();
        (d.canonical(), t)
    }

    #[test]
    fn counts() {
        let (d, t) = one_param_domain();
        let g = ground(&d, &t, 100).unwrap();
        assert_eq!(g.actions.iter().filter(|a| a.action.name == "look").count(), 3);
        assert_eq!(g.actions.iter().filter(|a| a.action.name == "prepare").count(), 1);
        assert!(matches!(ground(&d, &t, 3), Err(GroundingError::GroundingExplosion { count: 4, limit: 3 })));
    }

    #[test]
    fn unreachable_precondition_pruned() {
        let (mut d, t) = one_param_domain();
        d.predicates.push(PredicateDecl::new("magic", &[]));
        d.actions.push(ActionSchema::new("wish", &[]).pre("(magic)").adds("(ready)"));
        let d = d.canonical();
        let g = ground(&d, &t, 100).unwrap();
        assert!(g.actions.iter().all(|a| a.action.name != "wish"));
        assert!(g.atom_index(&"(magic)".parse().unwrap()).is_none());
    }

    #[test]
    fn bitset_ops() {
        let a = BitSet::from_indices(130, [0, 64, 129]);
        assert!(a.contains(129) && !a.contains(1));
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![0, 64, 129]);
        let b = BitSet::from_indices(130, [0, 1, 64, 129]);
        assert!(a.is_subset(&b) && !b.is_subset(&a));
        assert_eq!(b.count(), 4);
    }
}
