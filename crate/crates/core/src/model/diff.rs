use std::collections::{BTreeMap, BTreeSet};

use super::patch::{Edit, ModelPatch, PatchEntry, Provenance, SetDelta};
use super::types::*;

fn by_name<T>(items: &[T], key: impl Fn(&T) -> &str) -> BTreeMap<&str, &T> {
    items.iter().map(|x| (key(x), x)).collect()
}

/// Orders types so that each parent precedes its children.
fn parents_first(types: Vec<&TypeDecl>) -> Vec<&TypeDecl> {
    let names: BTreeSet<&str> = types.iter().map(|t| t.name()).collect();
    let mut placed: BTreeSet<&str> = BTreeSet::new();
    let mut out = Vec::new();
    let mut pending = types;
    while !pending.is_empty() {
        let (ready, rest): (Vec<_>, Vec<_>) = pending
            .into_iter()
            .partition(|t| !names.contains(t.parent()) || placed.contains(t.parent()));
        if ready.is_empty() {
            // cyclic input; emit the rest as-is and let validation report it
            out.extend(rest);
            break;
        }
        for t in &ready {
            placed.insert(t.name());
        }
        out.extend(ready);
        pending = rest;
    }
    out
}

/// Edit script turning `a` into `b`; empty iff the two models have equal content.
pub fn diff_domains(a: &Domain, b: &Domain) -> Vec<Edit> {
    let mut removals = Vec::new();
    let mut additions = Vec::new();
    if a.name != b.name {
        additions.push(Edit::RenameDomain { name: b.name.clone() });
    }

    // failure cases
    let (fa, fb) = (by_name(&a.failure_cases, |c| &c.name), by_name(&b.failure_cases, |c| &c.name));
    for (name, case) in &fa {
        if fb.get(name) != Some(case) {
            removals.push(Edit::RemoveFailureCase { name: name.to_string() });
        }
    }
    let mut case_adds = Vec::new();
    for (name, case) in &fb {
        if fa.get(name) != Some(case) {
            case_adds.push(Edit::AddFailureCase { case: (*case).clone() });
        }
    }

    for s in &a.initial_templates {
        if !b.initial_templates.contains(s) {
            removals.push(Edit::RemoveInitialTemplate { state: s.clone() });
        }
    }
    for g in &a.goal_templates {
        if !b.goal_templates.contains(g) {
            removals.push(Edit::RemoveGoalTemplate { goal: g.clone() });
        }
    }

    // actions: same parameters -> delta edits, otherwise replace
    let (aa, ab) = (by_name(&a.actions, |x| &x.name), by_name(&b.actions, |x| &x.name));
    let mut action_adds = Vec::new();
    let mut action_mods = Vec::new();
    for (name, old) in &aa {
        match ab.get(name) {
            None => removals.push(Edit::RemoveAction { name: name.to_string() }),
            Some(new) if new.params != old.params => {
                removals.push(Edit::RemoveAction { name: name.to_string() });
                action_adds.push(Edit::AddAction { action: (*new).clone() });
            }
            Some(new) => {
                let pre = SetDelta::between(&old.precondition, &new.precondition);
                if !pre.is_empty() {
                    action_mods.push(Edit::ModifyActionPrecondition { action: name.to_string(), precondition: pre });
                }
                let add = SetDelta::between(&old.add, &new.add);
                let delete = SetDelta::between(&old.delete, &new.delete);
                if !add.is_empty() || !delete.is_empty() {
                    action_mods.push(Edit::ModifyActionEffects { action: name.to_string(), add, delete });
                }
            }
        }
    }
    for (name, new) in &ab {
        if !aa.contains_key(name) {
            action_adds.push(Edit::AddAction { action: (*new).clone() });
        }
    }

    let (pa, pb) = (by_name(&a.predicates, |p| &p.name), by_name(&b.predicates, |p| &p.name));
    let mut pred_adds = Vec::new();
    for (name, p) in &pa {
        if pb.get(name) != Some(p) {
            removals.push(Edit::RemovePredicate { name: name.to_string() });
        }
    }
    for (name, p) in &pb {
        if pa.get(name) != Some(p) {
            pred_adds.push(Edit::AddPredicate { predicate: (*p).clone() });
        }
    }

    let (ca, cb) = (by_name(&a.constants, |c| c.name()), by_name(&b.constants, |c| c.name()));
    let mut const_adds = Vec::new();
    for (name, c) in &ca {
        if cb.get(name) != Some(c) {
            removals.push(Edit::RemoveConstant { name: name.to_string() });
        }
    }
    for (name, c) in &cb {
        if ca.get(name) != Some(c) {
            const_adds.push(Edit::AddConstant { constant: (*c).clone() });
        }
    }

    let (ta, tb) = (by_name(&a.types, |t| t.name()), by_name(&b.types, |t| t.name()));
    for (name, t) in &ta {
        if tb.get(name) != Some(t) {
            removals.push(Edit::RemoveType { name: name.to_string() });
        }
    }
    let new_types: Vec<&TypeDecl> = tb.iter().filter(|(n, t)| ta.get(*n) != Some(*t)).map(|(_, t)| *t).collect();
    for t in parents_first(new_types) {
        additions.push(Edit::AddType { decl: t.clone() });
    }

    additions.extend(const_adds);
    additions.extend(pred_adds);
    additions.extend(action_adds);
    additions.extend(action_mods);
    additions.extend(case_adds);
    for s in &b.initial_templates {
        if !a.initial_templates.contains(s) {
            additions.push(Edit::AddInitialTemplate { state: s.clone() });
        }
    }
    for g in &b.goal_templates {
        if !a.goal_templates.contains(g) {
            additions.push(Edit::AddGoalTemplate { goal: g.clone() });
        }
    }

    removals.extend(additions);
    removals
}

/// Patch from `a` to `b`: every edit accepted, provenance naming `b`'s level
/// and iteration with `a` as parent.
pub fn diff(a: &ModelHypothesis, b: &ModelHypothesis) -> ModelPatch {
    ModelPatch {
        provenance: Provenance {
            parent: a.id.clone(),
            level: if b.level == LevelTag::Seed { LevelTag::PostH4 } else { b.level },
            iteration: b.iteration,
            transcript_entries: Vec::new(),
        },
        entries: diff_domains(&a.domain, &b.domain)
            .into_iter()
            .map(|edit| PatchEntry { edit, accepted: true, rationale: String::new() })
            .collect(),
    }
}
