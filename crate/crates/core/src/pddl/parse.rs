use std::collections::BTreeSet;

use super::emit::COMPLEMENT_PREFIX;
use super::sexpr::{read, SExpr};
use super::PddlError;
use crate::model::{
    ActionSchema, Atom, Constant, Domain, GroundAtom, GroundLiteral, GroundTaskSpec, Literal, Param, PredicateDecl,
    State, Term, TypeDecl, ROOT_TYPE,
};

pub const SUPPORTED_REQUIREMENTS: [&str; 3] = [":strips", ":typing", ":negative-preconditions"];

fn syntax(e: &SExpr, message: impl Into<String>) -> PddlError {
    let p = e.pos();
    PddlError::Syntax { line: p.line, col: p.col, message: message.into() }
}

fn list<'a>(e: &'a SExpr, what: &str) -> Result<&'a [SExpr], PddlError> {
    e.as_list().ok_or_else(|| syntax(e, format!("expected a list for {what}")))
}

fn atom<'a>(e: &'a SExpr, what: &str) -> Result<&'a str, PddlError> {
    e.as_atom().ok_or_else(|| syntax(e, format!("expected a name for {what}")))
}

/// Splits `(define (<kind> <name>) sections...)`.
fn header<'a>(doc: &'a SExpr, kind: &str) -> Result<(String, &'a [SExpr]), PddlError> {
    let items = list(doc, "define")?;
    if doc.head() != Some("define") || items.len() < 2 {
        return Err(syntax(doc, "expected `(define ...)`"));
    }
    let name_part = list(&items[1], "the document name")?;
    if items[1].head() != Some(kind) || name_part.len() != 2 {
        return Err(syntax(&items[1], format!("expected `({kind} <name>)`")));
    }
    Ok((atom(&name_part[1], "the document name")?.to_string(), &items[2..]))
}

/// Typed list `a b - t c - u d`: names before `- t` get type `t`, trailing
/// untyped names get the root type.
fn typed_list(items: &[SExpr]) -> Result<Vec<(String, String)>, PddlError> {
    let mut out = Vec::new();
    let mut pending = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let name = atom(&items[i], "a typed list")?;
        if name == "-" {
            let ty = items.get(i + 1).ok_or_else(|| syntax(&items[i], "`-` without a type"))?;
            let ty = atom(ty, "a type")?;
            if pending.is_empty() {
                return Err(syntax(&items[i], "`-` without names before it"));
            }
            out.extend(pending.drain(..).map(|n: String| (n, ty.to_string())));
            i += 2;
        } else {
            pending.push(name.to_string());
            i += 1;
        }
    }
    out.extend(pending.into_iter().map(|n| (n, ROOT_TYPE.to_string())));
    Ok(out)
}

fn schema_atom(e: &SExpr) -> Result<Atom, PddlError> {
    let items = list(e, "an atom")?;
    let pred = items.first().ok_or_else(|| syntax(e, "empty atom"))?;
    let pred = atom(pred, "a predicate")?;
    let args = items[1..].iter().map(|a| atom(a, "an argument").map(Term::from)).collect::<Result<Vec<_>, _>>()?;
    Ok(Atom { predicate: pred.to_string(), args })
}

/// `(and l1 l2 ...)`, a single literal, or `()`.
fn conjuncts(e: &SExpr) -> Result<Vec<&SExpr>, PddlError> {
    match e.head() {
        Some("and") => Ok(list(e, "a conjunction")?[1..].iter().collect()),
        _ if list(e, "a condition")?.is_empty() => Ok(Vec::new()),
        Some("or") | Some("imply") | Some("forall") | Some("exists") | Some("when") => {
            Err(syntax(e, format!("`{}` is outside the supported STRIPS fragment", e.head().unwrap_or_default())))
        }
        _ => Ok(vec![e]),
    }
}

fn literal(e: &SExpr) -> Result<Literal, PddlError> {
    if e.head() == Some("not") {
        let items = list(e, "a negation")?;
        if items.len() != 2 {
            return Err(syntax(e, "`not` takes exactly one atom"));
        }
        return Ok(Literal::neg(schema_atom(&items[1])?));
    }
    Ok(Literal::pos(schema_atom(e)?))
}

fn check_requirements(items: &[SExpr]) -> Result<(), PddlError> {
    for r in items {
        let name = atom(r, "a requirement")?;
        if !SUPPORTED_REQUIREMENTS.contains(&name) {
            let p = r.pos();
            return Err(PddlError::UnsupportedRequirement { line: p.line, col: p.col, requirement: name.to_string() });
        }
    }
    Ok(())
}

/// Complements recognised by the `not-` convention: `not-p` is a complement
/// when `p` is declared with the same parameter types.
fn complements(predicates: &[PredicateDecl]) -> BTreeSet<String> {
    predicates
        .iter()
        .filter_map(|p| {
            let twin = p.name.strip_prefix(COMPLEMENT_PREFIX)?;
            let base = predicates.iter().find(|q| q.name == twin)?;
            let same = base.params.iter().map(Param::ty).eq(p.params.iter().map(Param::ty));
            same.then(|| p.name.clone())
        })
        .collect()
}

/// Parses a domain, folding complement predicates back into negated
/// preconditions. Failure cases and task templates are not part of PDDL, so
/// the result holds only the planning part of a model.
pub fn parse_domain(text: &str) -> Result<Domain, PddlError> {
    let doc = read(text)?;
    let (name, sections) = header(&doc, "domain")?;
    let mut d = Domain::new(&name);
    let mut raw_actions = Vec::new();
    for s in sections {
        let items = list(s, "a domain section")?;
        match s.head() {
            Some(":requirements") => check_requirements(&items[1..])?,
            Some(":types") => {
                d.types = typed_list(&items[1..])?.into_iter().map(|(n, t)| TypeDecl::new(&n, &t)).collect();
            }
            Some(":constants") => {
                d.constants = typed_list(&items[1..])?.into_iter().map(|(n, t)| Constant::new(&n, &t)).collect();
            }
            Some(":predicates") => {
                for p in &items[1..] {
                    let parts = list(p, "a predicate declaration")?;
                    let pname = atom(parts.first().ok_or_else(|| syntax(p, "empty predicate"))?, "a predicate")?;
                    let params = typed_list(&parts[1..])?;
                    d.predicates.push(PredicateDecl {
                        name: pname.to_string(),
                        params: params.iter().map(|(n, t)| Param::new(n, t)).collect(),
                    });
                }
            }
            Some(":action") => raw_actions.push(s),
            Some(other) => return Err(syntax(s, format!("unsupported domain section `{other}`"))),
            None => return Err(syntax(s, "expected a section keyword")),
        }
    }
    let comp = complements(&d.predicates);
    d.predicates.retain(|p| !comp.contains(&p.name));

    for s in raw_actions {
        let items = list(s, "an action")?;
        let aname = atom(items.get(1).ok_or_else(|| syntax(s, "action without a name"))?, "an action name")?;
        let mut action = ActionSchema::new(aname, &[]);
        let mut i = 2;
        while i < items.len() {
            let key = atom(&items[i], "an action keyword")?;
            let value = items.get(i + 1).ok_or_else(|| syntax(&items[i], format!("`{key}` without a value")))?;
            match key {
                ":parameters" => {
                    action.params =
                        typed_list(list(value, "parameters")?)?.iter().map(|(n, t)| Param::new(n, t)).collect();
                }
                ":precondition" => {
                    for c in conjuncts(value)? {
                        let mut lit = literal(c)?;
                        if lit.positive && comp.contains(&lit.atom.predicate) {
                            lit.atom.predicate = lit.atom.predicate[COMPLEMENT_PREFIX.len()..].to_string();
                            lit.positive = false;
                        }
                        action.precondition.insert(lit);
                    }
                }
                ":effect" => {
                    for c in conjuncts(value)? {
                        let lit = literal(c)?;
                        if comp.contains(&lit.atom.predicate) {
                            continue;
                        }
                        if lit.positive {
                            action.add.insert(lit.atom);
                        } else {
                            action.delete.insert(lit.atom);
                        }
                    }
                }
                other => return Err(syntax(&items[i], format!("unsupported action keyword `{other}`"))),
            }
            i += 2;
        }
        d.actions.push(action);
    }
    Ok(d.canonical())
}

fn ground_atom(e: &SExpr) -> Result<GroundAtom, PddlError> {
    let a = schema_atom(e)?;
    if let Some(v) = a.variables().next() {
        return Err(syntax(e, format!("variable ?{v} in a ground atom")));
    }
    Ok(GroundAtom { predicate: a.predicate, args: a.args.iter().map(|t| t.name().to_string()).collect() })
}

/// Parses a problem against `domain` (a model domain, not the compiled one):
/// complement atoms in `:init` are dropped and complement goals become
/// negated literals.
pub fn parse_problem(text: &str, domain: &Domain) -> Result<GroundTaskSpec, PddlError> {
    let doc = read(text)?;
    let (id, sections) = header(&doc, "problem")?;
    let is_complement = |p: &str| {
        p.strip_prefix(COMPLEMENT_PREFIX).is_some_and(|twin| domain.predicate(twin).is_some()) && domain.predicate(p).is_none()
    };
    let mut task = GroundTaskSpec::new(&id, State::new(), Default::default());
    for s in sections {
        let items = list(s, "a problem section")?;
        match s.head() {
            Some(":domain") => {
                let named = atom(items.get(1).ok_or_else(|| syntax(s, "`:domain` without a name"))?, "a domain name")?;
                if named != domain.name {
                    return Err(syntax(s, format!("problem is for domain `{named}`, not `{}`", domain.name)));
                }
            }
            Some(":requirements") => check_requirements(&items[1..])?,
            Some(":objects") => {
                task.objects = typed_list(&items[1..])?.into_iter().map(|(n, t)| Constant::new(&n, &t)).collect();
            }
            Some(":init") => {
                for a in &items[1..] {
                    let atom = ground_atom(a)?;
                    if !is_complement(&atom.predicate) {
                        task.init.insert(atom);
                    }
                }
            }
            Some(":goal") => {
                let goal = items.get(1).ok_or_else(|| syntax(s, "`:goal` without a condition"))?;
                for c in conjuncts(goal)? {
                    let (positive, inner) = if c.head() == Some("not") {
                        let parts = list(c, "a negation")?;
                        if parts.len() != 2 {
                            return Err(syntax(c, "`not` takes exactly one atom"));
                        }
                        (false, &parts[1])
                    } else {
                        (true, c)
                    };
                    let mut atom = ground_atom(inner)?;
                    let mut positive = positive;
                    if positive && is_complement(&atom.predicate) {
                        atom.predicate = atom.predicate[COMPLEMENT_PREFIX.len()..].to_string();
                        positive = false;
                    }
                    task.goal.insert(GroundLiteral { atom, positive });
                }
            }
            Some(other) => return Err(syntax(s, format!("unsupported problem section `{other}`"))),
            None => return Err(syntax(s, "expected a section keyword")),
        }
    }
    task.check(domain).map_err(PddlError::UnresolvedReference)?;
    Ok(task)
}
