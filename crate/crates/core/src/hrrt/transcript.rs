use serde::{Deserialize, Serialize};

use crate::model::{Edit, LevelTag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Accepted,
    Rejected,
    /// Accepted by the reviewer but past the per-level acceptance bound.
    OverBound,
    /// Accepted by the reviewer but not applicable to the model.
    Inapplicable,
    /// The agent's edit text did not parse.
    Malformed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProposalRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edit: Option<Edit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
    #[serde(default)]
    pub rationale: String,
    pub decision: Decision,
    /// Why a proposal was not applied, for malformed and inapplicable edits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// One question and everything that followed from it. `seq` is a logical
/// timestamp: entries of one transcript are numbered from 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub seq: u64,
    pub node: String,
    pub question: String,
    pub answer: String,
    #[serde(default)]
    pub proposals: Vec<ProposalRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Append-only record of one analysis level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub hypothesis: String,
    pub level: LevelTag,
    pub iteration: u32,
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn new(hypothesis: &str, level: LevelTag, iteration: u32) -> Self {
        Transcript { hypothesis: hypothesis.to_string(), level, iteration, entries: Vec::new() }
    }

    /// Appends a question/answer pair and returns its sequence number.
    pub fn push(&mut self, node: &str, question: &str, answer: &str) -> u64 {
        let seq = self.entries.len() as u64 + 1;
        self.entries.push(TranscriptEntry {
            seq,
            node: node.to_string(),
            question: question.to_string(),
            answer: answer.to_string(),
            proposals: Vec::new(),
            error: None,
        });
        seq
    }

    pub fn last_mut(&mut self) -> Option<&mut TranscriptEntry> {
        self.entries.last_mut()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Workspace key `<hypothesis>.<level>`.
    pub fn key(&self) -> String {
        format!("{}.{}", self.hypothesis, self.level)
    }

    pub fn accepted_edits(&self) -> impl Iterator<Item = &Edit> {
        self.entries
            .iter()
            .flat_map(|e| &e.proposals)
            .filter(|p| p.decision == Decision::Accepted)
            .filter_map(|p| p.edit.as_ref())
    }
}
