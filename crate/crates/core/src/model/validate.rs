use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ground::ObjectTable;
use super::types::*;
use crate::riskmit::BUILTIN_MITIGATIONS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    UnresolvedReference,
    UnresolvedMitigation,
    DuplicateSymbol,
    ArityMismatch,
    TypeMismatch,
    UndeclaredType,
    UnboundVariable,
    EffectConflict,
    BadIdentifier,
    ReservedName,
    TypeCycle,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub symbol: String,
    pub reason: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} `{}`: {}", self.kind, self.symbol, self.reason)
    }
}

struct Checker<'a> {
    domain: &'a Domain,
    out: Vec<Diagnostic>,
}

impl<'a> Checker<'a> {
    fn push(&mut self, kind: DiagnosticKind, symbol: &str, reason: impl Into<String>) {
        self.out.push(Diagnostic { kind, symbol: symbol.to_string(), reason: reason.into() });
    }

    fn ident(&mut self, name: &str, what: &str) {
        if !is_identifier(name) {
            self.push(DiagnosticKind::BadIdentifier, name, format!("{what} name is not a lower-case identifier"));
        }
    }

    fn unique<'n>(&mut self, names: impl IntoIterator<Item = &'n str>, what: &str) {
        let mut seen = BTreeSet::new();
        for n in names {
            if !seen.insert(n) {
                self.push(DiagnosticKind::DuplicateSymbol, n, format!("{what} declared more than once"));
            }
        }
    }

    fn type_ref(&mut self, ty: &str, owner: &str) {
        if !self.domain.has_type(ty) {
            self.push(DiagnosticKind::UndeclaredType, owner, format!("type `{ty}` is not declared"));
        }
    }

    fn types(&mut self) {
        let d = self.domain;
        for t in &d.types {
            self.ident(t.name(), "type");
            if t.name() == ROOT_TYPE {
                self.push(DiagnosticKind::ReservedName, t.name(), "the root type cannot be redeclared");
            }
            self.type_ref(t.parent(), t.name());
        }
        self.unique(d.types.iter().map(|t| t.name()), "type");
        let parents: BTreeMap<&str, &str> = d.types.iter().map(|t| (t.name(), t.parent())).collect();
        for t in &d.types {
            let mut cur = t.parent();
            let mut steps = 0;
            while cur != ROOT_TYPE {
                if cur == t.name() || steps > parents.len() {
                    self.push(DiagnosticKind::TypeCycle, t.name(), "type hierarchy contains a cycle");
                    break;
                }
                match parents.get(cur) {
                    Some(p) => cur = p,
                    None => break,
                }
                steps += 1;
            }
        }
    }

    fn params(&mut self, params: &[Param], owner: &str) {
        for p in params {
            self.ident(p.name(), "parameter");
            self.type_ref(p.ty(), owner);
        }
        let mut seen = BTreeSet::new();
        for p in params {
            if !seen.insert(p.name()) {
                self.push(DiagnosticKind::DuplicateSymbol, owner, format!("parameter ?{} repeated", p.name()));
            }
        }
    }

    fn schema_atom(&mut self, atom: &Atom, params: &[Param], owner: &str) {
        let Some(decl) = self.domain.predicate(&atom.predicate) else {
            self.push(
                DiagnosticKind::UnresolvedReference,
                owner,
                format!("predicate `{}` is not declared", atom.predicate),
            );
            return;
        };
        if decl.arity() != atom.args.len() {
            self.push(
                DiagnosticKind::ArityMismatch,
                owner,
                format!("`{}` takes {} arguments, got {}", decl.name, decl.arity(), atom.args.len()),
            );
            return;
        }
        for (term, slot) in atom.args.iter().zip(&decl.params) {
            let ty = match term {
                Term::Var(v) => match params.iter().find(|p| p.name() == v) {
                    Some(p) => p.ty().to_string(),
                    None => {
                        self.push(DiagnosticKind::UnboundVariable, owner, format!("?{v} is not a parameter"));
                        continue;
                    }
                },
                Term::Const(c) => match self.domain.constant(c) {
                    Some(k) => k.ty().to_string(),
                    None => {
                        self.push(DiagnosticKind::UnresolvedReference, owner, format!("constant `{c}` is not declared"));
                        continue;
                    }
                },
            };
            if !self.domain.is_subtype(&ty, slot.ty()) {
                self.push(
                    DiagnosticKind::TypeMismatch,
                    owner,
                    format!("{term} has type `{ty}` but `{}` expects `{}`", decl.name, slot.ty()),
                );
            }
        }
    }

    fn ground_atom(&mut self, objects: &ObjectTable, atom: &GroundAtom, owner: &str) {
        if let Err(reason) = objects.check_atom(self.domain, atom) {
            let kind = if self.domain.predicate(&atom.predicate).is_none() || reason.contains("not declared") {
                DiagnosticKind::UnresolvedReference
            } else if reason.contains("arguments") {
                DiagnosticKind::ArityMismatch
            } else {
                DiagnosticKind::TypeMismatch
            };
            self.push(kind, owner, reason);
        }
    }

    fn run(&mut self) {
        let d = self.domain;
        self.ident(&d.name, "domain");
        self.types();

        for c in &d.constants {
            self.ident(c.name(), "constant");
            self.type_ref(c.ty(), c.name());
        }
        self.unique(d.constants.iter().map(|c| c.name()), "constant");

        for p in &d.predicates {
            self.ident(&p.name, "predicate");
            self.params(&p.params, &p.name);
            if let Some(twin) = p.name.strip_prefix("not-") {
                if d.predicate(twin).is_some() {
                    self.push(
                        DiagnosticKind::ReservedName,
                        &p.name,
                        format!("`not-` prefix is reserved for the complement of `{twin}`"),
                    );
                }
            }
        }
        self.unique(d.predicates.iter().map(|p| p.name.as_str()), "predicate");

        for a in &d.actions {
            self.ident(&a.name, "action");
            self.params(&a.params, &a.name);
            for lit in &a.precondition {
                self.schema_atom(&lit.atom, &a.params, &a.name);
            }
            for atom in a.add.iter().chain(&a.delete) {
                self.schema_atom(atom, &a.params, &a.name);
            }
            for atom in a.add.intersection(&a.delete) {
                self.push(
                    DiagnosticKind::EffectConflict,
                    &a.name,
                    format!("{atom} is both added and deleted"),
                );
            }
        }
        self.unique(d.actions.iter().map(|a| a.name.as_str()), "action");

        let objects = ObjectTable::from_domain(d);
        for c in &d.failure_cases {
            self.ident(&c.name, "failure case");
            for lit in &c.trigger {
                self.ground_atom(&objects, &lit.atom, &c.name);
            }
            for m in &c.mitigations {
                if d.action(m).is_none() && !BUILTIN_MITIGATIONS.contains(&m.as_str()) {
                    self.push(
                        DiagnosticKind::UnresolvedMitigation,
                        &c.name,
                        format!("mitigation `{m}` is neither an action nor a built-in response"),
                    );
                }
            }
        }
        self.unique(d.failure_cases.iter().map(|c| c.name.as_str()), "failure case");

        for (i, s) in d.initial_templates.iter().enumerate() {
            let owner = format!("initial-template[{i}]");
            for atom in s.iter() {
                self.ground_atom(&objects, atom, &owner);
            }
        }
        for (i, g) in d.goal_templates.iter().enumerate() {
            let owner = format!("goal-template[{i}]");
            for lit in g {
                self.ground_atom(&objects, &lit.atom, &owner);
            }
        }
    }
}

/// Checks every model invariant; an empty result means the model is well formed.
pub fn validate_domain(domain: &Domain) -> Vec<Diagnostic> {
    let mut c = Checker { domain, out: Vec::new() };
    c.run();
    c.out
}

pub fn validate_model(m: &ModelHypothesis) -> Vec<Diagnostic> {
    validate_domain(&m.domain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn seed_fixtures_are_clean() {
        for (name, d) in fixtures::all_seed_domains() {
            assert_eq!(validate_domain(&d), vec![], "{name}");
        }
    }

    #[test]
    fn undeclared_effect_predicate() {
        let mut d = fixtures::lunar_seed();
        d.actions[0].add.insert("(ghost)".parse().unwrap());
        let diags = validate_domain(&d);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].kind, DiagnosticKind::UnresolvedReference);
        assert_eq!(diags[0].symbol, d.actions[0].name);
    }

    #[test]
    fn dangling_mitigation() {
        let mut d = fixtures::lunar_seed();
        d.failure_cases.push(FailureCase::new("fire", Severity::High, &[], &["extinguish"]));
        let diags = validate_domain(&d);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].kind, DiagnosticKind::UnresolvedMitigation);
    }

    #[test]
    fn degenerate_model_is_valid() {
        assert!(validate_domain(&Domain::new("empty")).is_empty());
    }

    #[test]
    fn structural_errors() {
        let mut d = Domain::new("bad");
        d.types.push(TypeDecl::new("a", "b"));
        d.types.push(TypeDecl::new("b", "a"));
        d.predicates.push(PredicateDecl::new("p", &[("x", "a")]));
        d.predicates.push(PredicateDecl::new("not-p", &[("x", "a")]));
        d.actions.push(
            ActionSchema::new("act", &[("x", "a")])
                .pre("(p ?y)")
                .adds("(p ?x)")
                .deletes("(p ?x)")
                .pre("(p ?x ?x)"),
        );
        let kinds: BTreeSet<_> = validate_domain(&d).into_iter().map(|d| d.kind).collect();
        for k in [
            DiagnosticKind::TypeCycle,
            DiagnosticKind::ReservedName,
            DiagnosticKind::UnboundVariable,
            DiagnosticKind::EffectConflict,
            DiagnosticKind::ArityMismatch,
        ] {
            assert!(kinds.contains(&k), "{k:?} missing from {kinds:?}");
        }
    }
}
