//! Seeded random models and tasks for property tests.

use std::collections::BTreeSet;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::bench::rng::{bernoulli, uniform_index};
use crate::model::ground::{ground_actions, ground_atoms, typed_tuples};
use crate::model::{
    ActionSchema, Atom, Constant, Domain, GroundAtom, GroundLiteral, GroundTaskSpec, Literal, ObjectTable, Param, PredicateDecl,
    State, Term, TypeDecl, ROOT_TYPE,
};

/// Size knobs of a random model.
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub max_types: usize,
    pub max_constants: usize,
    pub max_predicates: usize,
    pub max_arity: usize,
    pub max_actions: usize,
    pub max_params: usize,
    /// Rejection bound on the number of ground atoms.
    pub max_ground_atoms: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            max_types: 2,
            max_constants: 3,
            max_predicates: 4,
            max_arity: 2,
            max_actions: 4,
            max_params: 2,
            max_ground_atoms: 12,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn upto(rng: &mut ChaCha8Rng, max: usize) -> usize {
    uniform_index(rng, max + 1)
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, xs: &'a [T]) -> Option<&'a T> {
    (!xs.is_empty()).then(|| &xs[uniform_index(rng, xs.len())])
}

/// A random atom over `pred` whose arguments are drawn from parameters and
/// constants of fitting type; `None` when some slot has no candidate.
fn schema_atom(rng: &mut ChaCha8Rng, d: &Domain, pred: &PredicateDecl, params: &[Param]) -> Option<Atom> {
    let mut args = Vec::new();
    for slot in &pred.params {
        let mut terms: Vec<Term> = params
            .iter()
            .filter(|p| d.is_subtype(p.ty(), slot.ty()))
            .map(|p| Term::var(p.name()))
            .collect();
        terms.extend(d.constants.iter().filter(|c| d.is_subtype(c.ty(), slot.ty())).map(|c| Term::constant(c.name())));
        args.push(pick(rng, &terms)?.clone());
    }
    Some(Atom { predicate: pred.name.clone(), args })
}

/// A valid random model with negative preconditions and typed parameters.
/// Failure cases and templates are left empty.
pub fn random_domain(rng: &mut ChaCha8Rng, shape: &Shape) -> Domain {
    loop {
        let mut d = Domain::new("random");
        let mut types = vec![ROOT_TYPE.to_string()];
        for i in 0..upto(rng, shape.max_types) {
            let parent = pick(rng, &types).cloned().unwrap_or_else(|| ROOT_TYPE.to_string());
            let name = format!("t{i}");
            d.types.push(TypeDecl::new(&name, &parent));
            types.push(name);
        }
        for i in 0..1 + upto(rng, shape.max_constants.saturating_sub(1)) {
            let ty = pick(rng, &types).cloned().unwrap();
            d.constants.push(Constant::new(&format!("c{i}"), &ty));
        }
        for i in 0..1 + upto(rng, shape.max_predicates.saturating_sub(1)) {
            let params: Vec<(String, String)> = (0..upto(rng, shape.max_arity))
                .map(|j| (format!("x{j}"), pick(rng, &types).cloned().unwrap()))
                .collect();
            let refs: Vec<(&str, &str)> = params.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
            d.predicates.push(PredicateDecl::new(&format!("p{i}"), &refs));
        }
        if ground_atoms(&d, &ObjectTable::from_domain(&d)).len() > shape.max_ground_atoms {
            continue;
        }
        for i in 0..upto(rng, shape.max_actions) {
            let params: Vec<(String, String)> = (0..upto(rng, shape.max_params))
                .map(|j| (format!("v{j}"), pick(rng, &types).cloned().unwrap()))
                .collect();
            let refs: Vec<(&str, &str)> = params.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
            let mut a = ActionSchema::new(&format!("a{i}"), &refs);
            for _ in 0..upto(rng, 3) {
                let pred = pick(rng, &d.predicates).unwrap().clone();
                if let Some(atom) = schema_atom(rng, &d, &pred, &a.params) {
                    a.precondition.insert(Literal { atom, positive: !bernoulli(rng, 0.3) });
                }
            }
            for _ in 0..upto(rng, 2) {
                let pred = pick(rng, &d.predicates).unwrap().clone();
                if let Some(atom) = schema_atom(rng, &d, &pred, &a.params) {
                    a.add.insert(atom);
                }
            }
            for _ in 0..upto(rng, 2) {
                let pred = pick(rng, &d.predicates).unwrap().clone();
                if let Some(atom) = schema_atom(rng, &d, &pred, &a.params) {
                    if !a.add.contains(&atom) {
                        a.delete.insert(atom);
                    }
                }
            }
            d.actions.push(a);
        }
        return d.canonical();
    }
}

/// A random task: each ground atom is initially true with probability 1/2 and
/// the goal is one to three random literals.
pub fn random_task(rng: &mut ChaCha8Rng, d: &Domain, id: &str) -> GroundTaskSpec {
    let atoms = ground_atoms(d, &ObjectTable::from_domain(d));
    let init = State(atoms.iter().filter(|_| bernoulli(rng, 0.5)).cloned().collect());
    let mut goal = BTreeSet::new();
    for _ in 0..1 + upto(rng, 2) {
        if let Some(a) = pick(rng, &atoms) {
            goal.insert(GroundLiteral { atom: a.clone(), positive: !bernoulli(rng, 0.25) });
        }
    }
    GroundTaskSpec::new(id, init, goal)
}

/// A task whose goal is the end of a random walk of at most `steps` actions:
/// one literal per atom the walk changed. Falls back to [`random_task`] when
/// the walk changes nothing.
pub fn random_walk_task(rng: &mut ChaCha8Rng, d: &Domain, id: &str, steps: usize) -> GroundTaskSpec {
    let base = random_task(rng, d, id);
    let actions = ground_actions(d, &ObjectTable::from_domain(d));
    let mut state = base.init.clone();
    for _ in 0..steps {
        let applicable: Vec<_> = actions.iter().filter(|a| a.applicable(&state)).collect();
        match pick(rng, &applicable) {
            Some(a) => state = a.apply(&state),
            None => break,
        }
    }
    let goal: BTreeSet<GroundLiteral> = state
        .iter()
        .filter(|a| !base.init.contains(a))
        .map(|a| GroundLiteral::pos(a.clone()))
        .chain(base.init.iter().filter(|a| !state.contains(a)).map(|a| GroundLiteral::neg(a.clone())))
        .collect();
    if goal.is_empty() {
        return base;
    }
    GroundTaskSpec::new(id, base.init, goal)
}

/// A delivery task on the [`delivery_domain`](super::delivery_domain): two to
/// six locations joined by random two-way roads, one or two packages with
/// random origins and destinations.
pub fn random_delivery_task(rng: &mut ChaCha8Rng, id: &str) -> GroundTaskSpec {
    let n = 2 + upto(rng, 4);
    let m = 1 + upto(rng, 1);
    let locs: Vec<String> = (0..n).map(|i| format!("l{i}")).collect();
    let pkgs: Vec<String> = (0..m).map(|i| format!("pkg{i}")).collect();
    let mut init = State::new();
    let mut add = |text: String| init.insert(text.parse().expect("atom"));
    for i in 0..n {
        for j in i + 1..n {
            // a spanning path plus random shortcuts
            if j == i + 1 || bernoulli(rng, 0.2) {
                add(format!("(adjacent {} {})", locs[i], locs[j]));
                add(format!("(adjacent {} {})", locs[j], locs[i]));
            }
        }
    }
    add(format!("(truck-at {})", pick(rng, &locs).unwrap()));
    let mut goal = BTreeSet::new();
    for p in &pkgs {
        add(format!("(pkg-at {p} {})", pick(rng, &locs).unwrap()));
        let to: GroundAtom = format!("(pkg-at {p} {})", pick(rng, &locs).unwrap()).parse().expect("atom");
        goal.insert(GroundLiteral::pos(to));
    }
    let mut t = GroundTaskSpec::new(id, init, goal);
    t.objects = locs.iter().map(|l| Constant::new(l, "location")).collect();
    t.objects.extend(pkgs.iter().map(|p| Constant::new(p, "package")));
    t
}

/// Every type-consistent argument tuple of every action, as `(name, args)`.
pub fn action_instances(d: &Domain) -> Vec<(String, Vec<String>)> {
    let objects = ObjectTable::from_domain(d);
    d.actions
        .iter()
        .flat_map(|a| typed_tuples(d, &objects, &a.params).into_iter().map(move |t| (a.name.clone(), t)))
        .collect()
}
