//! Instantiation of action schemas and predicates over typed objects.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::types::*;

/// Objects available in a task: the domain constants plus task objects.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ObjectTable {
    types: BTreeMap<String, String>,
}

impl ObjectTable {
    pub fn from_domain(domain: &Domain) -> Self {
        ObjectTable::with_extra(domain, &[])
    }

    pub fn with_extra(domain: &Domain, extra: &[Constant]) -> Self {
        let types = domain
            .constants
            .iter()
            .chain(extra)
            .map(|c| (c.name().to_string(), c.ty().to_string()))
            .collect();
        ObjectTable { types }
    }

    pub fn type_of(&self, object: &str) -> Option<&str> {
        self.types.get(object).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    /// Objects whose type is `ty` or a subtype, in name order.
    pub fn of_type<'a>(&'a self, domain: &'a Domain, ty: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.types
            .iter()
            .filter(move |(_, t)| domain.is_subtype(t, ty))
            .map(|(n, _)| n.as_str())
    }

    /// Checks arity, object existence and argument types of a ground atom.
    pub fn check_atom(&self, domain: &Domain, atom: &GroundAtom) -> Result<(), String> {
        let decl = domain
            .predicate(&atom.predicate)
            .ok_or_else(|| format!("predicate `{}` is not declared", atom.predicate))?;
        if decl.arity() != atom.args.len() {
            return Err(format!(
                "`{}` takes {} arguments, got {}",
                decl.name,
                decl.arity(),
                atom.args.len()
            ));
        }
        for (arg, slot) in atom.args.iter().zip(&decl.params) {
            let ty = self.type_of(arg).ok_or_else(|| format!("object `{arg}` is not declared"))?;
            if !domain.is_subtype(ty, slot.ty()) {
                return Err(format!("object `{arg}` of type `{ty}` cannot fill a `{}` slot", slot.ty()));
            }
        }
        Ok(())
    }
}

/// Reference to a ground action by schema name and object arguments.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionRef {
    pub name: String,
    pub args: Vec<String>,
}

impl fmt::Display for ActionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

impl std::str::FromStr for ActionRef {
    type Err = super::sexpr_text::TextError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, args) = super::sexpr_text::parse_atom(s)?;
        Ok(ActionRef { name, args })
    }
}

impl Serialize for ActionRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ActionRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Fully instantiated action over model-level atoms (negative preconditions kept).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundAction {
    pub action: ActionRef,
    pub pre_pos: Vec<GroundAtom>,
    pub pre_neg: Vec<GroundAtom>,
    pub add: Vec<GroundAtom>,
    pub delete: Vec<GroundAtom>,
}

impl GroundAction {
    pub fn applicable(&self, state: &State) -> bool {
        self.pre_pos.iter().all(|a| state.contains(a)) && !self.pre_neg.iter().any(|a| state.contains(a))
    }

    /// Successor state: delete effects removed, then add effects added.
    pub fn apply(&self, state: &State) -> State {
        let mut next = state.clone();
        for a in &self.delete {
            next.remove(a);
        }
        for a in &self.add {
            next.insert(a.clone());
        }
        next
    }
}

pub fn bind_atom(atom: &Atom, binding: &BTreeMap<&str, &str>) -> GroundAtom {
    GroundAtom {
        predicate: atom.predicate.clone(),
        args: atom
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => binding.get(v.as_str()).copied().unwrap_or(v.as_str()).to_string(),
                Term::Const(c) => c.clone(),
            })
            .collect(),
    }
}

/// Binds `schema` to `args` (one object per parameter, in order).
pub fn instantiate_with(schema: &ActionSchema, args: &[String]) -> GroundAction {
    let binding: BTreeMap<&str, &str> = schema
        .params
        .iter()
        .map(|p| p.name())
        .zip(args.iter().map(String::as_str))
        .collect();
    let mut pre_pos = Vec::new();
    let mut pre_neg = Vec::new();
    for lit in &schema.precondition {
        let g = bind_atom(&lit.atom, &binding);
        if lit.positive {
            pre_pos.push(g);
        } else {
            pre_neg.push(g);
        }
    }
    GroundAction {
        action: ActionRef { name: schema.name.clone(), args: args.to_vec() },
        pre_pos,
        pre_neg,
        add: schema.add.iter().map(|a| bind_atom(a, &binding)).collect(),
        delete: schema.delete.iter().map(|a| bind_atom(a, &binding)).collect(),
    }
}

/// Cartesian product of the type-consistent objects for each slot.
pub fn typed_tuples(domain: &Domain, objects: &ObjectTable, params: &[Param]) -> Vec<Vec<String>> {
    let candidates: Vec<Vec<&str>> = params.iter().map(|p| objects.of_type(domain, p.ty()).collect()).collect();
    let mut out = vec![Vec::new()];
    for slot in &candidates {
        let mut next = Vec::with_capacity(out.len() * slot.len());
        for prefix in &out {
            for obj in slot {
                let mut t = prefix.clone();
                t.push(obj.to_string());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Number of type-consistent tuples without materializing them.
pub fn tuple_count(domain: &Domain, objects: &ObjectTable, params: &[Param]) -> u128 {
    params
        .iter()
        .map(|p| objects.of_type(domain, p.ty()).count() as u128)
        .product()
}

/// All ground actions in canonical order (schema name, then argument tuple).
pub fn ground_actions(domain: &Domain, objects: &ObjectTable) -> Vec<GroundAction> {
    let mut out = Vec::new();
    for schema in &domain.actions {
        for args in typed_tuples(domain, objects, &schema.params) {
            out.push(instantiate_with(schema, &args));
        }
    }
    out
}

/// Every type-consistent ground atom of the domain, sorted.
pub fn ground_atoms(domain: &Domain, objects: &ObjectTable) -> Vec<GroundAtom> {
    let mut out: Vec<GroundAtom> = domain
        .predicates
        .iter()
        .flat_map(|p| {
            typed_tuples(domain, objects, &p.params)
                .into_iter()
                .map(move |args| GroundAtom { predicate: p.name.clone(), args })
        })
        .collect();
    out.sort();
    out
}

/// Looks up a schema and binds it, checking argument count and types.
pub fn resolve_action(domain: &Domain, objects: &ObjectTable, action: &ActionRef) -> Result<GroundAction, String> {
    let schema = domain
        .action(&action.name)
        .ok_or_else(|| format!("action `{}` is not declared", action.name))?;
    if schema.params.len() != action.args.len() {
        return Err(format!("`{}` takes {} arguments", schema.name, schema.params.len()));
    }
    for (arg, p) in action.args.iter().zip(&schema.params) {
        let ty = objects.type_of(arg).ok_or_else(|| format!("object `{arg}` is not declared"))?;
        if !domain.is_subtype(ty, p.ty()) {
            return Err(format!("object `{arg}` cannot bind ?{}", p.name()));
        }
    }
    Ok(instantiate_with(schema, &action.args))
}
