use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::agent::{BlueAgent, H2_JUDGE, H3_CHALLENGE};
use super::assumptions::{extract_assumptions, Assumption, AssumptionStatus};
use super::dialogue::{normalize_answer, AnswerSchema, DialogueTree};
use super::possibilities::{enumerate_possibilities, EnumerationConfig, EnumerationError, Judgment, PossibilitySet};
use super::reflection::{reflect_into, ReflectionError, Session, DEFAULT_MAX_ACCEPTED};
use super::transcript::Transcript;
use crate::model::{apply_patch, diff_domains, LevelTag, LineageError, ModelHypothesis, ModelPatch, PatchError, Workspace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationConfig {
    pub enumeration: EnumerationConfig,
    pub max_accepted: usize,
    pub tree: DialogueTree,
}

impl IterationConfig {
    pub fn new(tree: DialogueTree) -> Self {
        IterationConfig { enumeration: EnumerationConfig::default(), max_accepted: DEFAULT_MAX_ACCEPTED, tree }
    }
}

#[derive(Debug, Error)]
pub enum IterationError {
    #[error(transparent)]
    Enumeration(#[from] EnumerationError),
    #[error(transparent)]
    Reflection(#[from] ReflectionError),
    #[error(transparent)]
    Patch(#[from] PatchError),
    #[error(transparent)]
    Lineage(#[from] LineageError),
}

/// Result of one level: the patch, the hypothesis it produced and the record.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelOutcome {
    pub patch: ModelPatch,
    pub hypothesis: ModelHypothesis,
    pub transcript: Transcript,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationOutcome {
    pub h2: LevelOutcome,
    pub h3: LevelOutcome,
    pub h4: LevelOutcome,
    /// Judged possibilities of the H2 analysis.
    pub possibilities: PossibilitySet,
    /// Assumptions of the H3 analysis with their final status.
    pub assumptions: Vec<Assumption>,
}

impl IterationOutcome {
    pub fn levels(&self) -> [&LevelOutcome; 3] {
        [&self.h2, &self.h3, &self.h4]
    }
}

fn finish(parent: &ModelHypothesis, session: Session<'_>) -> Result<LevelOutcome, IterationError> {
    let (patch, transcript) = session.finish();
    let hypothesis = apply_patch(parent, &patch)?;
    Ok(LevelOutcome { patch, hypothesis, transcript })
}

/// H2 with judgment: every enumerated possibility is put to the agent.
pub fn run_h2(
    m: &ModelHypothesis,
    cfg: &IterationConfig,
    agent: &mut dyn BlueAgent,
) -> Result<(LevelOutcome, PossibilitySet), IterationError> {
    let mut set = enumerate_possibilities(&m.domain, &m.domain.initial_templates, &cfg.enumeration)?;
    let mut session = Session::new(m, LevelTag::PostH2, agent, cfg.max_accepted)?;
    let schema = AnswerSchema::Choice(vec!["valid".into(), "invalid".into(), "unlikely".into()]);
    for p in &mut set.items {
        let slots = BTreeMap::from([
            ("domain".to_string(), m.domain.name.clone()),
            ("possibility".to_string(), p.render()),
            ("action".to_string(), p.action.to_string()),
        ]);
        let question = format!(
            "In the {} domain, is the transition {} valid, invalid or unlikely?",
            m.domain.name,
            p.render()
        );
        let ctx = session.context(H2_JUDGE, slots, Some(schema.clone()));
        let answer = session.ask(&question, &ctx)?;
        p.judgment = Judgment::from_answer(&answer);
        if p.judgment.needs_attention() {
            session.collect(&ctx)?;
        }
    }
    Ok((finish(m, session)?, set))
}

/// H3 with judgment: every assumption is offered to the agent for challenge.
pub fn run_h3(
    m: &ModelHypothesis,
    cfg: &IterationConfig,
    agent: &mut dyn BlueAgent,
) -> Result<(LevelOutcome, Vec<Assumption>), IterationError> {
    let mut assumptions = extract_assumptions(&m.domain);
    let mut session = Session::new(m, LevelTag::PostH3, agent, cfg.max_accepted)?;
    for a in &mut assumptions {
        let slots = BTreeMap::from([
            ("domain".to_string(), m.domain.name.clone()),
            ("assumption".to_string(), a.text.clone()),
            ("action".to_string(), a.action.clone()),
            ("condition".to_string(), a.condition.to_string()),
        ]);
        let question = format!("{} Could this assumption fail in practice?", a.text);
        let ctx = session.context(H3_CHALLENGE, slots, Some(AnswerSchema::YesNo));
        let answer = session.ask(&question, &ctx)?;
        if normalize_answer(&AnswerSchema::YesNo, &answer) == "yes" {
            a.status = AssumptionStatus::Challenged;
            if session.collect(&ctx)? > 0 {
                a.status = AssumptionStatus::Patched;
            }
        } else {
            a.status = AssumptionStatus::Validated;
        }
    }
    Ok((finish(m, session)?, assumptions))
}

/// H4 over the post-H3 model, informed by the H2 and H3 findings.
pub fn run_h4(
    m: &ModelHypothesis,
    possibilities: &PossibilitySet,
    assumptions: &[Assumption],
    cfg: &IterationConfig,
    agent: &mut dyn BlueAgent,
) -> Result<LevelOutcome, IterationError> {
    cfg.tree.validate().map_err(ReflectionError::from)?;
    let mut session = Session::new(m, LevelTag::PostH4, agent, cfg.max_accepted)?;
    // patched assumptions were already acted on; reflect on them as challenged
    let reflected: Vec<Assumption> = assumptions
        .iter()
        .cloned()
        .map(|mut a| {
            if a.status == AssumptionStatus::Patched {
                a.status = AssumptionStatus::Challenged;
            }
            a
        })
        .collect();
    reflect_into(&mut session, m, possibilities, &reflected, &cfg.tree)?;
    finish(m, session)
}

/// One full iteration: H2, H3 and H4 in sequence, each level building on the
/// hypothesis produced by the previous one.
pub fn run_iteration(
    m: &ModelHypothesis,
    cfg: &IterationConfig,
    agent: &mut dyn BlueAgent,
) -> Result<IterationOutcome, IterationError> {
    let (h2, possibilities) = run_h2(m, cfg, agent)?;
    let (h3, assumptions) = run_h3(&h2.hypothesis, cfg, agent)?;
    let h4 = run_h4(&h3.hypothesis, &possibilities, &assumptions, cfg, agent)?;
    Ok(IterationOutcome { h2, h3, h4, possibilities, assumptions })
}

/// Runs `k` iterations from `head` and records every level hypothesis, its
/// patch and its transcript (keyed `<hypothesis-id>.<level>`) in `ws`.
/// Returns the final post-H4 hypothesis.
pub fn iterate_workspace(
    ws: &mut Workspace,
    head: &str,
    k: usize,
    cfg: &IterationConfig,
    agent: &mut dyn BlueAgent,
) -> Result<ModelHypothesis, IterationError> {
    let mut current = ws.lineage.require(head)?.clone();
    for _ in 0..k {
        let out = run_iteration(&current, cfg, agent)?;
        for level in out.levels() {
            ws.lineage.insert_child(level.hypothesis.clone(), level.patch.clone())?;
            let key = format!("{}.{}", level.hypothesis.id, level.hypothesis.level.as_str());
            ws.transcripts.insert(key, level.transcript.clone());
        }
        current = out.h4.hypothesis;
    }
    Ok(current)
}

/// Smallest iteration `i` such that the two deltas following `chain[i]` are
/// both empty. `chain` holds consecutive post-H4 hypotheses (seed first).
pub fn detect_saturation(chain: &[ModelHypothesis]) -> Option<u32> {
    chain.windows(3).find_map(|w| {
        let quiet = diff_domains(&w[0].domain, &w[1].domain).is_empty()
            && diff_domains(&w[1].domain, &w[2].domain).is_empty();
        quiet.then_some(w[0].iteration)
    })
}
