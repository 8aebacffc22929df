//! H4 reflection, and the proposal bookkeeping shared by all three levels.

use std::collections::BTreeMap;

use thiserror::Error;

use super::agent::{AgentContext, AgentError, BlueAgent};
use super::assumptions::{Assumption, AssumptionKind, AssumptionStatus};
use super::dialogue::{render, AnswerSchema, DialogueError, DialogueTree};
use super::possibilities::PossibilitySet;
use super::transcript::{Decision, ProposalRecord, Transcript};
use crate::model::{apply_edits, Domain, LevelTag, ModelHypothesis, ModelPatch};

pub const DEFAULT_MAX_ACCEPTED: usize = 5;
pub const MIN_MAX_ACCEPTED: usize = 2;

#[derive(Debug, Error)]
pub enum ReflectionError {
    #[error("{source} (after {} transcript entries)", transcript.len())]
    AgentUnavailable { source: AgentError, transcript: Box<Transcript> },
    #[error(transparent)]
    Dialogue(#[from] DialogueError),
    #[error("max_accepted must be at least {MIN_MAX_ACCEPTED}, got {0}")]
    InvalidBound(usize),
}

/// Iteration a child of `m` belongs to: a new iteration starts after a seed
/// or post-H4 hypothesis.
pub fn child_iteration(m: &ModelHypothesis) -> u32 {
    match m.level {
        LevelTag::Seed | LevelTag::PostH4 => m.iteration + 1,
        _ => m.iteration,
    }
}

/// Asks questions, records them, and turns accepted proposals into a patch
/// whose accepted edits are known to apply.
pub(crate) struct Session<'a> {
    agent: &'a mut dyn BlueAgent,
    domain: Domain,
    pub patch: ModelPatch,
    pub transcript: Transcript,
    max_accepted: usize,
    iteration: u32,
    level: LevelTag,
}

impl<'a> Session<'a> {
    pub fn new(
        parent: &ModelHypothesis,
        level: LevelTag,
        agent: &'a mut dyn BlueAgent,
        max_accepted: usize,
    ) -> Result<Self, ReflectionError> {
        if max_accepted < MIN_MAX_ACCEPTED {
            return Err(ReflectionError::InvalidBound(max_accepted));
        }
        let iteration = child_iteration(parent);
        Ok(Session {
            agent,
            domain: parent.domain.clone(),
            patch: ModelPatch::new(parent, level, iteration),
            transcript: Transcript::new(&parent.id, level, iteration),
            max_accepted,
            iteration,
            level,
        })
    }

    pub fn context(&self, node: &str, slots: BTreeMap<String, String>, schema: Option<AnswerSchema>) -> AgentContext {
        AgentContext {
            domain: self.domain.name.clone(),
            node: node.to_string(),
            iteration: self.iteration,
            level: Some(self.level),
            slots,
            answer_schema: schema,
        }
    }

    fn fail(&mut self, source: AgentError) -> ReflectionError {
        if let Some(last) = self.transcript.last_mut() {
            if last.error.is_none() {
                last.error = Some(source.to_string());
            }
        }
        ReflectionError::AgentUnavailable { source, transcript: Box::new(self.transcript.clone()) }
    }

    pub fn ask(&mut self, question: &str, ctx: &AgentContext) -> Result<String, ReflectionError> {
        match self.agent.answer(question, ctx) {
            Ok(answer) => {
                self.transcript.push(&ctx.node, question, &answer);
                Ok(answer)
            }
            Err(e) => {
                self.transcript.push(&ctx.node, question, "");
                Err(self.fail(e))
            }
        }
    }

    /// Collects the agent's proposals for the last question. Returns the
    /// number of edits accepted into the patch.
    pub fn collect(&mut self, ctx: &AgentContext) -> Result<usize, ReflectionError> {
        let proposals = self.agent.propose_modifications(ctx).map_err(|e| self.fail(e))?;
        let seq = self.transcript.entries.last().map(|e| e.seq).unwrap_or(0);
        let mut accepted_here = 0;
        for proposed in proposals {
            let record = match proposed {
                Err(bad) => ProposalRecord {
                    edit: None,
                    raw: Some(bad.raw),
                    rationale: String::new(),
                    decision: Decision::Malformed,
                    note: Some(bad.reason),
                },
                Ok(p) => {
                    let wanted = self.agent.review(&p, ctx).map_err(|e| self.fail(e))?;
                    let (decision, note) = if !wanted {
                        (Decision::Rejected, None)
                    } else if self.patch.accepted_count() >= self.max_accepted {
                        (Decision::OverBound, Some(format!("at most {} edits are accepted per level", self.max_accepted)))
                    } else {
                        match apply_edits(&self.domain, [&p.edit]) {
                            Ok(next) => {
                                self.domain = next;
                                (Decision::Accepted, None)
                            }
                            Err(e) => (Decision::Inapplicable, Some(e.to_string())),
                        }
                    };
                    let accepted = decision == Decision::Accepted;
                    self.patch.push(p.edit.clone(), accepted, p.rationale.clone());
                    if accepted {
                        accepted_here += 1;
                        if self.patch.provenance.transcript_entries.last() != Some(&seq) {
                            self.patch.provenance.transcript_entries.push(seq);
                        }
                    }
                    ProposalRecord { edit: Some(p.edit), raw: None, rationale: p.rationale, decision, note }
                }
            };
            if let Some(last) = self.transcript.last_mut() {
                last.proposals.push(record);
            }
        }
        Ok(accepted_here)
    }

    pub fn finish(self) -> (ModelPatch, Transcript) {
        (self.patch, self.transcript)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Focus {
    topic: &'static str,
    slots: BTreeMap<String, String>,
}

fn focus_items(domain: &Domain, possibilities: &PossibilitySet, assumptions: &[Assumption]) -> Vec<Focus> {
    let base = BTreeMap::from([("domain".to_string(), domain.name.clone())]);
    let mut items = Vec::new();
    for p in possibilities.items.iter().filter(|p| p.judgment.needs_attention()) {
        let mut slots = base.clone();
        slots.insert("possibility".into(), p.render());
        slots.insert("action".into(), p.action.to_string());
        items.push(Focus { topic: "possibility", slots });
    }
    for (kind, topic) in [(AssumptionKind::Pre, "pre-assumption"), (AssumptionKind::Post, "post-assumption")] {
        for a in assumptions.iter().filter(|a| a.kind == kind && a.status == AssumptionStatus::Challenged) {
            let mut slots = base.clone();
            slots.insert("assumption".into(), a.text.clone());
            slots.insert("action".into(), a.action.clone());
            slots.insert("condition".into(), a.condition.to_string());
            items.push(Focus { topic, slots });
        }
    }
    items.push(Focus { topic: "general", slots: base });
    items
}

/// H4: walks the dialogue tree once per focus item, in priority order
/// (possibilities judged invalid or unlikely, challenged pre-assumptions,
/// challenged post-assumptions, then one general pass).
///
/// A root answered with the `topic` schema routes each item by its topic;
/// items whose topic has no child are skipped.
pub fn run_reflection(
    m: &ModelHypothesis,
    possibilities: &PossibilitySet,
    assumptions: &[Assumption],
    tree: &DialogueTree,
    agent: &mut dyn BlueAgent,
    max_accepted: usize,
) -> Result<(ModelPatch, Transcript), ReflectionError> {
    tree.validate()?;
    let mut session = Session::new(m, LevelTag::PostH4, agent, max_accepted)?;
    reflect_into(&mut session, m, possibilities, assumptions, tree)?;
    Ok(session.finish())
}

pub(crate) fn reflect_into(
    session: &mut Session<'_>,
    m: &ModelHypothesis,
    possibilities: &PossibilitySet,
    assumptions: &[Assumption],
    tree: &DialogueTree,
) -> Result<(), ReflectionError> {
    let root = &tree.nodes[&tree.root];
    for item in focus_items(&m.domain, possibilities, assumptions) {
        let mut node = if root.answer_schema == AnswerSchema::Topic {
            tree.next(&tree.root, item.topic).map(str::to_string)
        } else {
            Some(tree.root.clone())
        };
        while let Some(id) = node {
            let n = &tree.nodes[&id];
            let question = render(&n.question, &item.slots);
            let ctx = session.context(&id, item.slots.clone(), Some(n.answer_schema.clone()));
            let answer = session.ask(&question, &ctx)?;
            session.collect(&ctx)?;
            node = tree.next(&id, &answer).map(str::to_string);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::hrrt::agent::{Script, ScriptedAgent};
    use crate::hrrt::possibilities::{enumerate_possibilities, EnumerationConfig};
    use crate::hrrt::{extract_assumptions, Decision};
    use crate::model::Edit;

    fn inputs() -> (ModelHypothesis, PossibilitySet, Vec<Assumption>) {
        let m = ModelHypothesis::seed(fixtures::lunar_seed());
        let p = enumerate_possibilities(&m.domain, &m.domain.initial_templates, &EnumerationConfig::default()).unwrap();
        let a = extract_assumptions(&m.domain);
        (m, p, a)
    }

    #[test]
    fn no_change_agent_yields_empty_patch() {
        let (m, p, a) = inputs();
        let tree = fixtures::lunar_tree();
        let mut agent = ScriptedAgent::no_op();
        let (patch, transcript) = run_reflection(&m, &p, &a, &tree, &mut agent, 5).unwrap();
        assert_eq!(patch.accepted_count(), 0);
        assert!(!transcript.is_empty());
        assert!(transcript.entries.iter().all(|e| e.proposals.is_empty()));
    }

    #[test]
    fn scripted_dropped_sample_case() {
        let (m, p, a) = inputs();
        let tree = fixtures::lunar_tree();
        let script = Script::from_json(
            r#"{"schema_version": 1, "default_answer": "no",
                "rules": [{"node": "general-resources", "answer": "yes"},
                          {"node": "dropped-sample", "answer": "yes",
                           "edits": [{"op": "add-failure-case", "case": {"name": "dropped-sample",
                                      "trigger": ["(not (holding imetro sample1))"], "severity": "medium",
                                      "mitigations": ["request-help"]}}]}]}"#,
        )
        .unwrap();
        let mut agent = ScriptedAgent::new(script);
        let (patch, _) = run_reflection(&m, &p, &a, &tree, &mut agent, 5).unwrap();
        let accepted: Vec<&Edit> = patch.accepted().collect();
        assert_eq!(accepted.len(), 1);
        assert!(matches!(accepted[0], Edit::AddFailureCase { case } if case.name == "dropped-sample"));
    }

    #[test]
    fn bound_and_determinism() {
        let (m, p, a) = inputs();
        let tree = fixtures::general_safety_tree();
        let edits: Vec<String> = (0..8)
            .map(|i| format!(r#"{{"op": "add-predicate", "predicate": {{"name": "extra-{i}", "params": []}}}}"#))
            .collect();
        let script = format!(
            r#"{{"schema_version": 1, "default_answer": "yes", "rules": [{{"node": "{}", "answer": "yes", "once": true, "edits": [{}]}}]}}"#,
            tree.next(&tree.root, "general").unwrap(),
            edits.join(",")
        );
        let run = || {
            let mut agent = ScriptedAgent::new(Script::from_json(&script).unwrap());
            run_reflection(&m, &p, &a, &tree, &mut agent, 3).unwrap()
        };
        let (patch, transcript) = run();
        assert!(patch.accepted_count() <= 3);
        let over = transcript.entries.iter().flat_map(|e| &e.proposals).filter(|r| r.decision == Decision::OverBound).count();
        assert_eq!(patch.accepted_count() + over, patch.entries.len());
        let (patch2, transcript2) = run();
        assert_eq!(serde_json::to_string(&patch).unwrap(), serde_json::to_string(&patch2).unwrap());
        assert_eq!(serde_json::to_string(&transcript).unwrap(), serde_json::to_string(&transcript2).unwrap());
        crate::model::apply_patch(&m, &patch).unwrap();
    }

    #[test]
    fn bound_below_two_rejected() {
        let (m, p, a) = inputs();
        let mut agent = ScriptedAgent::no_op();
        assert!(matches!(
            run_reflection(&m, &p, &a, &fixtures::general_safety_tree(), &mut agent, 1),
            Err(ReflectionError::InvalidBound(1))
        ));
    }
}
