use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::patch::{apply_patch, ModelPatch, PatchError};
use super::types::{LevelTag, ModelHypothesis};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LineageError {
    #[error("unknown hypothesis {0}")]
    UnknownHypothesis(String),
    #[error("hypothesis {id} repeats (iteration {iteration}, {level}) already present in its chain")]
    DuplicateLevel { id: String, iteration: u32, level: LevelTag },
    #[error("seed hypotheses must have level seed and no parent")]
    NotASeed,
    #[error("recorded patch does not reproduce hypothesis {0}")]
    PatchMismatch(String),
    #[error(transparent)]
    Patch(#[from] PatchError),
}

/// Parent-linked set of hypotheses with the patch that produced each child.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lineage {
    pub hypotheses: BTreeMap<String, ModelHypothesis>,
    pub patches: BTreeMap<String, ModelPatch>,
}

impl Lineage {
    pub fn new() -> Self {
        Lineage::default()
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ModelHypothesis> {
        self.hypotheses.get(id)
    }

    pub fn require(&self, id: &str) -> Result<&ModelHypothesis, LineageError> {
        self.get(id).ok_or_else(|| LineageError::UnknownHypothesis(id.to_string()))
    }

    /// Resolves a full id or a unique id prefix.
    pub fn resolve(&self, id_or_prefix: &str) -> Option<&ModelHypothesis> {
        if let Some(h) = self.get(id_or_prefix) {
            return Some(h);
        }
        let mut matches = self.hypotheses.range(id_or_prefix.to_string()..).take_while(|(k, _)| k.starts_with(id_or_prefix));
        match (matches.next(), matches.next()) {
            (Some((_, h)), None) => Some(h),
            _ => None,
        }
    }

    pub fn insert_seed(&mut self, seed: ModelHypothesis) -> Result<(), LineageError> {
        if seed.level != LevelTag::Seed || seed.parent.is_some() {
            return Err(LineageError::NotASeed);
        }
        self.hypotheses.insert(seed.id.clone(), seed);
        Ok(())
    }

    /// Applies `patch` to its parent and records the child.
    pub fn commit(&mut self, patch: ModelPatch) -> Result<ModelHypothesis, LineageError> {
        let parent = self.require(&patch.provenance.parent)?;
        let child = apply_patch(parent, &patch)?;
        self.insert_child(child.clone(), patch)?;
        Ok(child)
    }

    /// Records an already computed child after checking its recorded patch.
    pub fn insert_child(&mut self, child: ModelHypothesis, patch: ModelPatch) -> Result<(), LineageError> {
        let parent_id = child.parent.clone().ok_or(LineageError::NotASeed)?;
        let parent = self.require(&parent_id)?;
        let replay = apply_patch(parent, &patch)?;
        if replay != child {
            return Err(LineageError::PatchMismatch(child.id.clone()));
        }
        if self.hypotheses.contains_key(&child.id) {
            return Ok(());
        }
        for ancestor in self.chain(&parent_id)? {
            if ancestor.iteration == child.iteration && ancestor.level == child.level {
                return Err(LineageError::DuplicateLevel {
                    id: child.id.clone(),
                    iteration: child.iteration,
                    level: child.level,
                });
            }
        }
        self.patches.insert(child.id.clone(), patch);
        self.hypotheses.insert(child.id.clone(), child);
        Ok(())
    }

    /// Ancestors of `id` from the seed down to `id` itself.
    pub fn chain(&self, id: &str) -> Result<Vec<&ModelHypothesis>, LineageError> {
        let mut out = Vec::new();
        let mut cur = Some(id.to_string());
        while let Some(c) = cur {
            let h = self.require(&c)?;
            if out.len() > self.hypotheses.len() {
                break;
            }
            out.push(h);
            cur = h.parent.clone();
        }
        out.reverse();
        Ok(out)
    }

    /// The seed plus every post-H4 hypothesis on the chain ending at `head`.
    pub fn main_chain(&self, head: &str) -> Result<Vec<&ModelHypothesis>, LineageError> {
        Ok(self
            .chain(head)?
            .into_iter()
            .filter(|h| matches!(h.level, LevelTag::Seed | LevelTag::PostH4))
            .collect())
    }

    pub fn children(&self, id: &str) -> Vec<&ModelHypothesis> {
        self.hypotheses.values().filter(|h| h.parent.as_deref() == Some(id)).collect()
    }

    /// Hypotheses without children, sorted by (iteration, level, id).
    pub fn heads(&self) -> Vec<&ModelHypothesis> {
        let mut heads: Vec<_> = self
            .hypotheses
            .values()
            .filter(|h| !self.hypotheses.values().any(|c| c.parent.as_deref() == Some(h.id.as_str())))
            .collect();
        heads.sort_by(|a, b| (a.iteration, a.level, &a.id).cmp(&(b.iteration, b.level, &b.id)));
        heads
    }

    /// Replays every recorded patch against its parent.
    pub fn verify(&self) -> Result<(), LineageError> {
        for h in self.hypotheses.values() {
            match &h.parent {
                None if h.level == LevelTag::Seed => {}
                None => return Err(LineageError::NotASeed),
                Some(p) => {
                    let parent = self.require(p)?;
                    let patch = self
                        .patches
                        .get(&h.id)
                        .ok_or_else(|| LineageError::PatchMismatch(h.id.clone()))?;
                    if &apply_patch(parent, patch)? != h {
                        return Err(LineageError::PatchMismatch(h.id.clone()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Parent map as persisted in `lineage.json`.
    pub fn parent_map(&self) -> BTreeMap<String, Option<String>> {
        self.hypotheses.iter().map(|(id, h)| (id.clone(), h.parent.clone())).collect()
    }
}
