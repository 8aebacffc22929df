//! Dialogue trees driving reflective questioning.
//!
//! A tree is loaded from `*.sigma.json`:
//!
//! ```json
//! {"schema_version": 1, "root": "focus",
//!  "nodes": {"focus": {"question": "...", "answer_schema": "topic",
//!                      "children": {"general": "resources"}}, ...}}
//! ```
//!
//! The root is a topic router: it is answered by the session itself with the
//! kind of the item under discussion (`possibility`, `pre-assumption`,
//! `post-assumption` or `general`). Every other node is answered by the blue
//! agent. Child keys are normalised answers or `*`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::canonical::SCHEMA_VERSION;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnswerSchema {
    YesNo,
    Choice(Vec<String>),
    FreeText,
    Topic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueNode {
    pub question: String,
    pub answer_schema: AnswerSchema,
    #[serde(default)]
    pub children: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patch_hint: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueTree {
    pub schema_version: u32,
    pub root: String,
    pub nodes: BTreeMap<String, DialogueNode>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DialogueError {
    #[error("dialogue tree parse error: {0}")]
    Parse(String),
    #[error("unsupported dialogue schema_version {0}")]
    SchemaVersion(u32),
    #[error("root node `{0}` does not exist")]
    MissingRoot(String),
    #[error("node `{node}` links to missing node `{child}`")]
    DanglingChild { node: String, child: String },
    #[error("cycle through node `{0}`")]
    Cycle(String),
    #[error("node `{node}`: answer `{key}` is not one of its choices")]
    UnknownChoice { node: String, key: String },
}

/// Canonical form of an answer used for child lookup.
pub fn normalize_answer(schema: &AnswerSchema, answer: &str) -> String {
    let a = answer.trim().to_ascii_lowercase();
    match schema {
        AnswerSchema::YesNo => match a.as_str() {
            "y" | "yes" | "true" => "yes".into(),
            "n" | "no" | "false" => "no".into(),
            _ => a,
        },
        _ => a,
    }
}

/// Substitutes `{slot}` occurrences; unknown slots are left untouched.
pub fn render(template: &str, slots: &BTreeMap<String, String>) -> String {
    let mut out = template.to_string();
    for (k, v) in slots {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

impl DialogueTree {
    pub fn from_json(text: &str) -> Result<Self, DialogueError> {
        let tree: DialogueTree = serde_json::from_str(text).map_err(|e| DialogueError::Parse(e.to_string()))?;
        tree.validate()?;
        Ok(tree)
    }

    pub fn validate(&self) -> Result<(), DialogueError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(DialogueError::SchemaVersion(self.schema_version));
        }
        if !self.nodes.contains_key(&self.root) {
            return Err(DialogueError::MissingRoot(self.root.clone()));
        }
        for (id, node) in &self.nodes {
            for (key, child) in &node.children {
                if !self.nodes.contains_key(child) {
                    return Err(DialogueError::DanglingChild { node: id.clone(), child: child.clone() });
                }
                if let AnswerSchema::Choice(options) = &node.answer_schema {
                    if key != "*" && !options.iter().any(|o| o.to_ascii_lowercase() == *key) {
                        return Err(DialogueError::UnknownChoice { node: id.clone(), key: key.clone() });
                    }
                }
            }
        }
        // iterative DFS with an explicit on-path set
        let mut on_path = BTreeSet::new();
        let mut done = BTreeSet::new();
        let mut stack: Vec<(String, bool)> = vec![(self.root.clone(), false)];
        while let Some((id, exiting)) = stack.pop() {
            if exiting {
                on_path.remove(&id);
                done.insert(id);
                continue;
            }
            if done.contains(&id) {
                continue;
            }
            if !on_path.insert(id.clone()) {
                return Err(DialogueError::Cycle(id));
            }
            stack.push((id.clone(), true));
            for child in self.nodes[&id].children.values() {
                if on_path.contains(child) {
                    return Err(DialogueError::Cycle(child.clone()));
                }
                if !done.contains(child) {
                    stack.push((child.clone(), false));
                }
            }
        }
        Ok(())
    }

    pub fn node(&self, id: &str) -> Option<&DialogueNode> {
        self.nodes.get(id)
    }

    /// Child reached by `answer` at `node`, falling back to the `*` edge.
    pub fn next(&self, node: &str, answer: &str) -> Option<&str> {
        let n = self.nodes.get(node)?;
        let key = normalize_answer(&n.answer_schema, answer);
        n.children.get(&key).or_else(|| n.children.get("*")).map(String::as_str)
    }

    pub fn to_json(&self) -> String {
        crate::model::canonical::to_canonical_string(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn bundled_trees_validate() {
        let general = fixtures::general_safety_tree();
        general.validate().unwrap();
        let text = serde_json::to_string(&general).unwrap();
        assert!(text.contains(
            "Are there external, independently verified resources for identifying failure cases in this domain?"
        ));
        fixtures::lunar_tree().validate().unwrap();
    }

    #[test]
    fn rejects_cycles_and_dangling_children() {
        let mut t = fixtures::general_safety_tree();
        let root = t.root.clone();
        let any = t.nodes.keys().find(|k| **k != root).unwrap().clone();
        t.nodes.get_mut(&any).unwrap().children.insert("*".into(), root.clone());
        assert!(matches!(t.validate(), Err(DialogueError::Cycle(_))));

        let mut t = fixtures::general_safety_tree();
        t.nodes.get_mut(&root).unwrap().children.insert("general".into(), "nowhere".into());
        assert!(matches!(t.validate(), Err(DialogueError::DanglingChild { .. })));
    }

    #[test]
    fn rendering_and_routing() {
        let slots = BTreeMap::from([("domain".to_string(), "lunar".to_string())]);
        assert_eq!(render("In the {domain} domain, {other}?", &slots), "In the lunar domain, {other}?");
        let t = fixtures::general_safety_tree();
        assert!(t.next(&t.root, "general").is_some());
        assert_eq!(normalize_answer(&AnswerSchema::YesNo, " Y "), "yes");
    }
}
