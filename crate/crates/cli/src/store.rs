//! A workspace directory opened for reading and writing.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hrrt_core::bench::RNG_ALGORITHM;
use hrrt_core::fixtures;
use hrrt_core::hrrt::{DialogueTree, IterationConfig, Script, DEFAULT_MAX_ACCEPTED};
use hrrt_core::model::canonical::{to_canonical_string, SCHEMA_VERSION};
use hrrt_core::model::workspace::atomic_write;
use hrrt_core::model::{load_workspace, save_workspace, LevelTag, ModelHypothesis, Workspace};

use crate::error::{Error, Result};

/// `workspace.json`: how the workspace was created and what drives it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceMeta {
    pub schema_version: u32,
    pub template: Option<String>,
    /// Identifier of the task-generation random source.
    pub rng: String,
    /// Default scripted-agent script, relative to the workspace root.
    pub script: Option<String>,
    /// Dialogue tree, relative to the workspace root.
    pub tree: Option<String>,
    pub max_accepted: usize,
}

impl Default for WorkspaceMeta {
    fn default() -> Self {
        WorkspaceMeta {
            schema_version: SCHEMA_VERSION,
            template: None,
            rng: RNG_ALGORITHM.into(),
            script: None,
            tree: None,
            max_accepted: DEFAULT_MAX_ACCEPTED,
        }
    }
}

pub struct Store {
    pub root: PathBuf,
    pub meta: WorkspaceMeta,
    pub ws: Workspace,
}

const META_FILE: &str = "workspace.json";

impl Store {
    /// Creates a workspace from a bundled template: seed model, the
    /// template's script and dialogue tree, and `workspace.json`.
    pub fn init(root: &Path, template: &str) -> Result<Store> {
        let t = fixtures::template(template).ok_or_else(|| {
            let names: Vec<&str> = fixtures::TEMPLATES.iter().map(|t| t.name).collect();
            Error::Usage(format!("unknown template `{template}` (expected {})", names.join(", ")))
        })?;
        if root.join("lineage.json").exists() {
            return Err(Error::Validation(format!("{} already holds a workspace", root.display())));
        }
        let tree_name = if t.tree == fixtures::GENERAL_SAFETY_TREE { "general-safety" } else { t.name };
        let meta = WorkspaceMeta {
            template: Some(t.name.into()),
            script: Some(format!("scripts/{}.blue.json", t.name)),
            tree: Some(format!("dialogue/{tree_name}.sigma.json")),
            ..WorkspaceMeta::default()
        };
        atomic_write(&root.join(meta.script.as_deref().unwrap()), t.script.as_bytes())?;
        atomic_write(&root.join(meta.tree.as_deref().unwrap()), t.tree.as_bytes())?;
        atomic_write(&root.join(META_FILE), to_canonical_string(&meta).as_bytes())?;
        let mut ws = Workspace::default();
        ws.lineage.insert_seed(ModelHypothesis::seed(t.domain()))?;
        save_workspace(&ws, root)?;
        Ok(Store { root: root.to_path_buf(), meta, ws })
    }

    pub fn open(root: &Path) -> Result<Store> {
        if !root.join("lineage.json").exists() {
            return Err(Error::Validation(format!("{} is not a workspace (no lineage.json)", root.display())));
        }
        let ws = load_workspace(root)?;
        let meta_path = root.join(META_FILE);
        let meta = if meta_path.exists() {
            let text = fs::read_to_string(&meta_path)?;
            serde_json::from_str(&text).map_err(|e| Error::Validation(format!("{}: {e}", meta_path.display())))?
        } else {
            WorkspaceMeta::default()
        };
        Ok(Store { root: root.to_path_buf(), meta, ws })
    }

    pub fn save(&self) -> Result<()> {
        Ok(save_workspace(&self.ws, &self.root)?)
    }

    /// Resolves a hypothesis reference: a full id, a unique id prefix,
    /// `seed`, or `head` (the only leaf of the lineage).
    pub fn resolve(&self, reference: &str) -> Result<ModelHypothesis> {
        let lineage = &self.ws.lineage;
        let found = match reference {
            "head" => {
                let heads = lineage.heads();
                match heads.as_slice() {
                    [h] => Some((*h).clone()),
                    [] => None,
                    _ => return Err(Error::Validation("lineage has several heads; name a hypothesis id".into())),
                }
            }
            "seed" => {
                let seeds: Vec<_> = lineage.hypotheses.values().filter(|h| h.level == LevelTag::Seed).collect();
                match seeds.as_slice() {
                    [s] => Some((*s).clone()),
                    [] => None,
                    _ => return Err(Error::Validation("lineage has several seeds; name a hypothesis id".into())),
                }
            }
            _ => lineage.resolve(reference).cloned(),
        };
        found.ok_or_else(|| Error::NotFound(format!("unknown hypothesis `{reference}`")))
    }

    fn read_relative(&self, rel: &str) -> Result<String> {
        let path = self.root.join(rel);
        fs::read_to_string(&path).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
    }

    /// The script at `path` (relative to the workspace unless absolute), or
    /// the workspace default.
    pub fn script(&self, path: Option<&str>) -> Result<Script> {
        let rel = path
            .or(self.meta.script.as_deref())
            .ok_or_else(|| Error::Usage("no script given and the workspace has no default script".into()))?;
        Script::from_json(&self.read_relative(rel)?).map_err(|e| Error::Validation(format!("{rel}: {e}")))
    }

    pub fn tree(&self) -> Result<DialogueTree> {
        match &self.meta.tree {
            Some(rel) => DialogueTree::from_json(&self.read_relative(rel)?)
                .map_err(|e| Error::Validation(format!("{rel}: {e}"))),
            None => Ok(fixtures::general_safety_tree()),
        }
    }

    pub fn iteration_config(&self) -> Result<IterationConfig> {
        let mut cfg = IterationConfig::new(self.tree()?);
        cfg.max_accepted = self.meta.max_accepted;
        Ok(cfg)
    }
}
