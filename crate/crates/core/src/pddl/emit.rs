use std::collections::BTreeSet;
use std::fmt::Write;

use super::PddlError;
use crate::model::ground::typed_tuples;
use crate::model::{Atom, Domain, GroundAtom, GroundLiteral, GroundTaskSpec, Literal, PredicateDecl};

/// Prefix of the complement predicate introduced for negated preconditions.
pub const COMPLEMENT_PREFIX: &str = "not-";

pub fn complement_name(predicate: &str) -> String {
    format!("{COMPLEMENT_PREFIX}{predicate}")
}

/// Predicates used negatively in some precondition; each gets a complement.
pub fn complemented_predicates(domain: &Domain) -> BTreeSet<String> {
    domain
        .actions
        .iter()
        .flat_map(|a| &a.precondition)
        .filter(|l| !l.positive)
        .map(|l| l.atom.predicate.clone())
        .collect()
}

fn complement_atom(atom: &Atom) -> Atom {
    Atom { predicate: complement_name(&atom.predicate), args: atom.args.clone() }
}

/// Pure STRIPS version of the planning part of `domain`.
///
/// Every predicate in `comp` gets a twin `not-p` with the same parameters;
/// negated preconditions on `p` become positive ones on `not-p`, and every
/// effect on `p` applies the opposite effect to `not-p`. Only the negated
/// literals over `comp` are rewritten.
pub fn compile_domain(domain: &Domain, comp: &BTreeSet<String>) -> Domain {
    let mut out = domain.planning_projection();
    out.predicates = Vec::new();
    for p in &domain.predicates {
        out.predicates.push(p.clone());
        if comp.contains(&p.name) {
            out.predicates.push(PredicateDecl { name: complement_name(&p.name), params: p.params.clone() });
        }
    }
    for a in &mut out.actions {
        a.precondition = a
            .precondition
            .iter()
            .map(|l| {
                if !l.positive && comp.contains(&l.atom.predicate) {
                    Literal::pos(complement_atom(&l.atom))
                } else {
                    l.clone()
                }
            })
            .collect();
        let adds: Vec<Atom> = a.add.iter().filter(|x| comp.contains(&x.predicate)).map(complement_atom).collect();
        let dels: Vec<Atom> = a.delete.iter().filter(|x| comp.contains(&x.predicate)).map(complement_atom).collect();
        a.delete.extend(adds);
        a.add.extend(dels);
    }
    out
}

/// Compiled domain and task as consumed by the planner: no negative
/// preconditions or goals remain.
pub fn compile_task(domain: &Domain, task: &GroundTaskSpec) -> (Domain, GroundTaskSpec) {
    let mut comp = complemented_predicates(domain);
    comp.extend(task.goal.iter().filter(|l| !l.positive).map(|l| l.atom.predicate.clone()));
    let compiled = compile_domain(domain, &comp);
    let mut out = task.clone();
    out.init = compiled_init(domain, task, &comp);
    out.goal = task
        .goal
        .iter()
        .map(|l| {
            if l.positive {
                l.clone()
            } else {
                GroundLiteral::pos(GroundAtom { predicate: complement_name(&l.atom.predicate), args: l.atom.args.clone() })
            }
        })
        .collect();
    (compiled, out)
}

/// Initial state extended with `not-p` for every `p` in `comp` that is false.
pub fn compiled_init(domain: &Domain, task: &GroundTaskSpec, comp: &BTreeSet<String>) -> crate::model::State {
    let objects = task.object_table(domain);
    let mut init = task.init.clone();
    for p in domain.predicates.iter().filter(|p| comp.contains(&p.name)) {
        for args in typed_tuples(domain, &objects, &p.params) {
            let atom = GroundAtom { predicate: p.name.clone(), args };
            if !task.init.contains(&atom) {
                init.insert(GroundAtom { predicate: complement_name(&p.name), args: atom.args });
            }
        }
    }
    init
}

fn conj(items: &[String]) -> String {
    if items.len() == 1 {
        items[0].clone()
    } else {
        format!("(and{})", items.iter().map(|i| format!(" {i}")).collect::<String>())
    }
}

fn predicate_line(p: &PredicateDecl) -> String {
    let mut s = format!("({}", p.name);
    for param in &p.params {
        let _ = write!(s, " {param}");
    }
    s.push(')');
    s
}

fn print_domain(d: &Domain) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", d.name);
    out.push_str("  (:requirements :strips :typing)\n");
    if !d.types.is_empty() {
        let types: Vec<String> = d.types.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "  (:types {})", types.join(" "));
    }
    if !d.constants.is_empty() {
        let cs: Vec<String> = d.constants.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "  (:constants {})", cs.join(" "));
    }
    if d.predicates.is_empty() {
        out.push_str("  (:predicates)\n");
    } else {
        out.push_str("  (:predicates\n");
        for p in &d.predicates {
            let _ = writeln!(out, "    {}", predicate_line(p));
        }
        out.push_str("  )\n");
    }
    for a in &d.actions {
        let pre: Vec<String> = a.precondition.iter().map(ToString::to_string).collect();
        let eff: Vec<String> =
            a.add.iter().map(ToString::to_string).chain(a.delete.iter().map(|x| format!("(not {x})"))).collect();
        let params: Vec<String> = a.params.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "  (:action {}", a.name);
        let _ = writeln!(out, "    :parameters ({})", params.join(" "));
        let _ = writeln!(out, "    :precondition {}", conj(&pre));
        let _ = writeln!(out, "    :effect {}", conj(&eff));
        out.push_str("  )\n");
    }
    out.push_str(")\n");
    out
}

/// PDDL domain text for the planning part of `domain`.
///
/// Negative preconditions are compiled into complement predicates `not-p`
/// that every effect on `p` keeps up to date, so the output only needs
/// `:strips` and `:typing`.
pub fn emit_domain(domain: &Domain) -> Result<String, PddlError> {
    for a in &domain.actions {
        if let Some(l) = a.precondition.iter().find(|l| domain.predicate(&l.atom.predicate).is_none()) {
            return Err(PddlError::UnsupportedConstruct(format!(
                "action `{}` uses undeclared predicate `{}`",
                a.name, l.atom.predicate
            )));
        }
    }
    Ok(print_domain(&compile_domain(domain, &complemented_predicates(domain))))
}

/// PDDL problem text for `task` against the domain text of [`emit_domain`].
///
/// Negated goal literals use the complement predicate when the domain has
/// one and `(not ...)` otherwise.
pub fn emit_problem(domain: &Domain, task: &GroundTaskSpec) -> Result<String, PddlError> {
    task.check(domain).map_err(PddlError::UnresolvedReference)?;
    let comp = complemented_predicates(domain);
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {})", task.id);
    let _ = writeln!(out, "  (:domain {})", domain.name);
    let mut objects = task.objects.clone();
    objects.sort();
    if !objects.is_empty() {
        let os: Vec<String> = objects.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "  (:objects {})", os.join(" "));
    }
    let init = compiled_init(domain, task, &comp);
    if init.is_empty() {
        out.push_str("  (:init)\n");
    } else {
        out.push_str("  (:init\n");
        for a in init.iter() {
            let _ = writeln!(out, "    {a}");
        }
        out.push_str("  )\n");
    }
    let goal: Vec<String> = task
        .goal
        .iter()
        .map(|l| match (l.positive, comp.contains(&l.atom.predicate)) {
            (true, _) => l.atom.to_string(),
            (false, true) => {
                GroundAtom { predicate: complement_name(&l.atom.predicate), args: l.atom.args.clone() }.to_string()
            }
            (false, false) => format!("(not {})", l.atom),
        })
        .collect();
    let _ = writeln!(out, "  (:goal {})", conj(&goal));
    out.push_str(")\n");
    Ok(out)
}
