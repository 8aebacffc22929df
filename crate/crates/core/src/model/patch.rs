use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::types::*;
use super::validate::{validate_domain, Diagnostic};

/// Insertions and removals applied to a set-valued field.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize + Ord", deserialize = "T: Deserialize<'de> + Ord"))]
pub struct SetDelta<T> {
    #[serde(default = "BTreeSet::new", skip_serializing_if = "BTreeSet::is_empty")]
    pub insert: BTreeSet<T>,
    #[serde(default = "BTreeSet::new", skip_serializing_if = "BTreeSet::is_empty")]
    pub remove: BTreeSet<T>,
}

impl<T: Ord> Default for SetDelta<T> {
    fn default() -> Self {
        SetDelta { insert: BTreeSet::new(), remove: BTreeSet::new() }
    }
}

impl<T: Ord + Clone> SetDelta<T> {
    pub fn between(from: &BTreeSet<T>, to: &BTreeSet<T>) -> Self {
        SetDelta {
            insert: to.difference(from).cloned().collect(),
            remove: from.difference(to).cloned().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.insert.is_empty() && self.remove.is_empty()
    }

    pub fn inserting(items: impl IntoIterator<Item = T>) -> Self {
        SetDelta { insert: items.into_iter().collect(), remove: BTreeSet::new() }
    }
}

/// One model edit.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Edit {
    RenameDomain { name: String },
    AddType { decl: TypeDecl },
    RemoveType { name: String },
    AddConstant { constant: Constant },
    RemoveConstant { name: String },
    AddPredicate { predicate: PredicateDecl },
    RemovePredicate { name: String },
    AddAction { action: ActionSchema },
    RemoveAction { name: String },
    ModifyActionPrecondition { action: String, precondition: SetDelta<Literal> },
    ModifyActionEffects {
        action: String,
        #[serde(default)]
        add: SetDelta<Atom>,
        #[serde(default)]
        delete: SetDelta<Atom>,
    },
    AddFailureCase { case: FailureCase },
    RemoveFailureCase { name: String },
    AddInitialTemplate { state: State },
    RemoveInitialTemplate { state: State },
    AddGoalTemplate { goal: Goal },
    RemoveGoalTemplate { goal: Goal },
}

impl Edit {
    pub fn kind(&self) -> &'static str {
        match self {
            Edit::RenameDomain { .. } => "rename-domain",
            Edit::AddType { .. } => "add-type",
            Edit::RemoveType { .. } => "remove-type",
            Edit::AddConstant { .. } => "add-constant",
            Edit::RemoveConstant { .. } => "remove-constant",
            Edit::AddPredicate { .. } => "add-predicate",
            Edit::RemovePredicate { .. } => "remove-predicate",
            Edit::AddAction { .. } => "add-action",
            Edit::RemoveAction { .. } => "remove-action",
            Edit::ModifyActionPrecondition { .. } => "modify-action-precondition",
            Edit::ModifyActionEffects { .. } => "modify-action-effects",
            Edit::AddFailureCase { .. } => "add-failure-case",
            Edit::RemoveFailureCase { .. } => "remove-failure-case",
            Edit::AddInitialTemplate { .. } => "add-initial-template",
            Edit::RemoveInitialTemplate { .. } => "remove-initial-template",
            Edit::AddGoalTemplate { .. } => "add-goal-template",
            Edit::RemoveGoalTemplate { .. } => "remove-goal-template",
        }
    }

    pub fn is_removal(&self) -> bool {
        matches!(
            self,
            Edit::RemoveType { .. }
                | Edit::RemoveConstant { .. }
                | Edit::RemovePredicate { .. }
                | Edit::RemoveAction { .. }
                | Edit::RemoveFailureCase { .. }
                | Edit::RemoveInitialTemplate { .. }
                | Edit::RemoveGoalTemplate { .. }
        )
    }

    /// Short human-readable summary, e.g. `add-predicate airlock-pressurized`.
    pub fn summary(&self) -> String {
        let target = match self {
            Edit::RenameDomain { name } => name.clone(),
            Edit::AddType { decl } => decl.name().to_string(),
            Edit::AddConstant { constant } => constant.name().to_string(),
            Edit::AddPredicate { predicate } => predicate.name.clone(),
            Edit::AddAction { action } => action.name.clone(),
            Edit::AddFailureCase { case } => case.name.clone(),
            Edit::RemoveType { name }
            | Edit::RemoveConstant { name }
            | Edit::RemovePredicate { name }
            | Edit::RemoveAction { name }
            | Edit::RemoveFailureCase { name } => name.clone(),
            Edit::ModifyActionPrecondition { action, .. } | Edit::ModifyActionEffects { action, .. } => {
                action.clone()
            }
            Edit::AddInitialTemplate { state } | Edit::RemoveInitialTemplate { state } => state.to_string(),
            Edit::AddGoalTemplate { goal } | Edit::RemoveGoalTemplate { goal } => goal
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(" "),
        };
        format!("{} {}", self.kind(), target)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchEntry {
    pub edit: Edit,
    pub accepted: bool,
    #[serde(default)]
    pub rationale: String,
}

/// Where a patch came from and which hypothesis it produces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub parent: String,
    pub level: LevelTag,
    pub iteration: u32,
    /// Transcript entries (by sequence number) that proposed the edits.
    #[serde(default)]
    pub transcript_entries: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelPatch {
    pub provenance: Provenance,
    pub entries: Vec<PatchEntry>,
}

impl ModelPatch {
    pub fn new(parent: &ModelHypothesis, level: LevelTag, iteration: u32) -> Self {
        ModelPatch {
            provenance: Provenance {
                parent: parent.id.clone(),
                level,
                iteration,
                transcript_entries: Vec::new(),
            },
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, edit: Edit, accepted: bool, rationale: impl Into<String>) {
        self.entries.push(PatchEntry { edit, accepted, rationale: rationale.into() });
    }

    pub fn accepted(&self) -> impl Iterator<Item = &Edit> {
        self.entries.iter().filter(|e| e.accepted).map(|e| &e.edit)
    }

    pub fn accepted_count(&self) -> usize {
        self.entries.iter().filter(|e| e.accepted).count()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PatchError {
    #[error("patch targets parent {expected} but was applied to {actual}")]
    ParentMismatch { expected: String, actual: String },
    #[error("a patch cannot produce a seed hypothesis")]
    SeedLevel,
    #[error("unresolved reference in edit {index} ({edit}): {reason}")]
    UnresolvedReference { index: usize, edit: String, reason: String },
    #[error("conflicting edit {index} ({edit}): {reason}")]
    ConflictingEdit { index: usize, edit: String, reason: String },
    #[error("patched model is invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidResult(Vec<Diagnostic>),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Kind {
    Type,
    Constant,
    Predicate,
    Action,
    FailureCase,
}

struct Applier {
    domain: Domain,
    removed: HashSet<(Kind, String)>,
    index: usize,
    label: String,
}

impl Applier {
    fn unresolved(&self, reason: impl Into<String>) -> PatchError {
        PatchError::UnresolvedReference { index: self.index, edit: self.label.clone(), reason: reason.into() }
    }

    fn conflict(&self, reason: impl Into<String>) -> PatchError {
        PatchError::ConflictingEdit { index: self.index, edit: self.label.clone(), reason: reason.into() }
    }

    fn remove_named<T>(
        &mut self,
        kind: Kind,
        name: &str,
        pick: impl Fn(&mut Domain) -> &mut Vec<T>,
        key: impl Fn(&T) -> &str,
    ) -> Result<(), PatchError> {
        if self.removed.contains(&(kind, name.to_string())) {
            return Err(self.conflict(format!("`{name}` was already removed by this patch")));
        }
        let list = pick(&mut self.domain);
        let Some(pos) = list.iter().position(|x| key(x) == name) else {
            return Err(self.unresolved(format!("`{name}` does not exist")));
        };
        list.remove(pos);
        self.removed.insert((kind, name.to_string()));
        Ok(())
    }

    fn check_atom_refs(&self, atom: &Atom) -> Result<(), PatchError> {
        let Some(decl) = self.domain.predicate(&atom.predicate) else {
            return Err(self.unresolved(format!("predicate `{}` is not declared", atom.predicate)));
        };
        if decl.arity() != atom.args.len() {
            return Err(self.unresolved(format!("`{}` has arity {}", decl.name, decl.arity())));
        }
        for t in &atom.args {
            if let Term::Const(c) = t {
                if self.domain.constant(c).is_none() {
                    return Err(self.unresolved(format!("constant `{c}` is not declared")));
                }
            }
        }
        Ok(())
    }

    fn modifiable_action(&self, name: &str) -> Result<usize, PatchError> {
        if self.removed.contains(&(Kind::Action, name.to_string())) {
            return Err(self.conflict(format!("action `{name}` was removed earlier in this patch")));
        }
        self.domain
            .actions
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| self.unresolved(format!("action `{name}` does not exist")))
    }

    fn apply_delta<T: Ord + Clone + fmt::Display>(
        &self,
        set: &mut BTreeSet<T>,
        delta: &SetDelta<T>,
    ) -> Result<(), PatchError> {
        for x in &delta.remove {
            if !set.remove(x) {
                return Err(self.unresolved(format!("{x} is not present")));
            }
        }
        for x in &delta.insert {
            if !set.insert(x.clone()) {
                return Err(self.conflict(format!("{x} is already present")));
            }
        }
        Ok(())
    }

    fn apply(&mut self, edit: &Edit) -> Result<(), PatchError> {
        match edit {
            Edit::RenameDomain { name } => {
                if *name == self.domain.name {
                    return Err(self.conflict("domain already has this name"));
                }
                self.domain.name = name.clone();
            }
            Edit::AddType { decl } => {
                if self.domain.has_type(decl.name()) {
                    return Err(self.conflict(format!("type `{}` already exists", decl.name())));
                }
                if !self.domain.has_type(decl.parent()) {
                    return Err(self.unresolved(format!("parent type `{}` is not declared", decl.parent())));
                }
                self.domain.types.push(decl.clone());
            }
            Edit::RemoveType { name } => {
                self.remove_named(Kind::Type, name, |d| &mut d.types, |t| t.name())?;
            }
            Edit::AddConstant { constant } => {
                if self.domain.constant(constant.name()).is_some() {
                    return Err(self.conflict(format!("constant `{}` already exists", constant.name())));
                }
                if !self.domain.has_type(constant.ty()) {
                    return Err(self.unresolved(format!("type `{}` is not declared", constant.ty())));
                }
                self.domain.constants.push(constant.clone());
            }
            Edit::RemoveConstant { name } => {
                self.remove_named(Kind::Constant, name, |d| &mut d.constants, |c| c.name())?;
            }
            Edit::AddPredicate { predicate } => {
                if self.domain.predicate(&predicate.name).is_some() {
                    return Err(self.conflict(format!("predicate `{}` already exists", predicate.name)));
                }
                if let Some(p) = predicate.params.iter().find(|p| !self.domain.has_type(p.ty())) {
                    return Err(self.unresolved(format!("type `{}` is not declared", p.ty())));
                }
                self.domain.predicates.push(predicate.clone());
            }
            Edit::RemovePredicate { name } => {
                self.remove_named(Kind::Predicate, name, |d| &mut d.predicates, |p| &p.name)?;
            }
            Edit::AddAction { action } => {
                if self.domain.action(&action.name).is_some() {
                    return Err(self.conflict(format!("action `{}` already exists", action.name)));
                }
                for atom in action.precondition.iter().map(|l| &l.atom).chain(&action.add).chain(&action.delete) {
                    self.check_atom_refs(atom)?;
                }
                self.domain.actions.push(action.clone());
            }
            Edit::RemoveAction { name } => {
                self.remove_named(Kind::Action, name, |d| &mut d.actions, |a| &a.name)?;
            }
            Edit::ModifyActionPrecondition { action, precondition } => {
                let pos = self.modifiable_action(action)?;
                for lit in &precondition.insert {
                    self.check_atom_refs(&lit.atom)?;
                }
                let mut set = self.domain.actions[pos].precondition.clone();
                self.apply_delta(&mut set, precondition)?;
                self.domain.actions[pos].precondition = set;
            }
            Edit::ModifyActionEffects { action, add, delete } => {
                let pos = self.modifiable_action(action)?;
                for atom in add.insert.iter().chain(&delete.insert) {
                    self.check_atom_refs(atom)?;
                }
                let mut adds = self.domain.actions[pos].add.clone();
                let mut dels = self.domain.actions[pos].delete.clone();
                self.apply_delta(&mut adds, add)?;
                self.apply_delta(&mut dels, delete)?;
                self.domain.actions[pos].add = adds;
                self.domain.actions[pos].delete = dels;
            }
            Edit::AddFailureCase { case } => {
                if self.domain.failure_case(&case.name).is_some() {
                    return Err(self.conflict(format!("failure case `{}` already exists", case.name)));
                }
                if let Some(l) = case.trigger.iter().find(|l| self.domain.predicate(&l.atom.predicate).is_none()) {
                    return Err(self.unresolved(format!("trigger {l} uses an undeclared predicate")));
                }
                self.domain.failure_cases.push(case.clone());
            }
            Edit::RemoveFailureCase { name } => {
                self.remove_named(Kind::FailureCase, name, |d| &mut d.failure_cases, |c| &c.name)?;
            }
            Edit::AddInitialTemplate { state } => {
                if self.domain.initial_templates.contains(state) {
                    return Err(self.conflict("initial template already present"));
                }
                self.domain.initial_templates.push(state.clone());
            }
            Edit::RemoveInitialTemplate { state } => {
                let Some(pos) = self.domain.initial_templates.iter().position(|s| s == state) else {
                    return Err(self.unresolved("initial template not present"));
                };
                self.domain.initial_templates.remove(pos);
            }
            Edit::AddGoalTemplate { goal } => {
                if self.domain.goal_templates.contains(goal) {
                    return Err(self.conflict("goal template already present"));
                }
                self.domain.goal_templates.push(goal.clone());
            }
            Edit::RemoveGoalTemplate { goal } => {
                let Some(pos) = self.domain.goal_templates.iter().position(|g| g == goal) else {
                    return Err(self.unresolved("goal template not present"));
                };
                self.domain.goal_templates.remove(pos);
            }
        }
        Ok(())
    }
}

/// Applies the accepted edits of `patch`, in order, to a copy of `parent`.
///
/// The result carries the iteration and level named by the patch provenance
/// and must validate cleanly; any failure aborts without a partial result.
pub fn apply_patch(parent: &ModelHypothesis, patch: &ModelPatch) -> Result<ModelHypothesis, PatchError> {
    if patch.provenance.parent != parent.id {
        return Err(PatchError::ParentMismatch {
            expected: patch.provenance.parent.clone(),
            actual: parent.id.clone(),
        });
    }
    if patch.provenance.level == LevelTag::Seed {
        return Err(PatchError::SeedLevel);
    }
    let domain = apply_edits(&parent.domain, patch.accepted())?;
    Ok(ModelHypothesis::build(
        domain,
        patch.provenance.iteration,
        patch.provenance.level,
        Some(parent.id.clone()),
    ))
}

/// Applies edits to a domain and validates the outcome.
pub fn apply_edits<'e>(domain: &Domain, edits: impl IntoIterator<Item = &'e Edit>) -> Result<Domain, PatchError> {
    let mut applier = Applier { domain: domain.clone(), removed: HashSet::new(), index: 0, label: String::new() };
    for (i, edit) in edits.into_iter().enumerate() {
        applier.index = i;
        applier.label = edit.summary();
        applier.apply(edit)?;
    }
    let mut out = applier.domain;
    out.canonicalize();
    let diags = validate_domain(&out);
    if !diags.is_empty() {
        return Err(PatchError::InvalidResult(diags));
    }
    Ok(out)
}
