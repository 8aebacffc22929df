//! Interactive red-team sessions: one analysis level at a time, with a
//! patch review queue between the analysis and its commit.
//!
//! Phases run `idle → h2-review → h3-review → h4-dialogue → idle`. `advance`
//! enters the next phase and runs its analysis; `commit` persists the
//! reviewed patch. An interactive agent pauses the analysis at every
//! question until it is answered.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::PathBuf;
use std::sync::Mutex;
use std::thread::JoinHandle;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use hrrt_core::hrrt::dialogue::normalize_answer;
use hrrt_core::hrrt::{
    extract_assumptions, run_h2, run_h3, run_h4, AnswerSchema, Assumption, BlueAgent, HumanReply, InteractiveAgent,
    InteractiveBridge, IterationConfig, LevelOutcome, PendingQuestion, PossibilitySet, Transcript, MIN_MAX_ACCEPTED,
};
use hrrt_core::model::{apply_patch, LevelTag, ModelHypothesis, ModelPatch};

use crate::error::{Error, Result};
use crate::ops::{self, AgentKind};
use crate::store::Store;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Idle,
    H2Review,
    H3Review,
    H4Dialogue,
}

impl Phase {
    fn level(self) -> Option<LevelTag> {
        match self {
            Phase::Idle => None,
            Phase::H2Review => Some(LevelTag::PostH2),
            Phase::H3Review => Some(LevelTag::PostH3),
            Phase::H4Dialogue => Some(LevelTag::PostH4),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
pub struct CreateRequest {
    #[serde(default)]
    pub workspace: Option<PathBuf>,
    pub model_id: String,
    pub agent: AgentKind,
    #[serde(default)]
    pub script: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct AnswerRequest {
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub choice: Option<String>,
    /// Edits proposed with the answer, as edit JSON objects.
    #[serde(default)]
    pub edits: Vec<Value>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PatchView {
    pub index: usize,
    pub kind: String,
    pub summary: String,
    pub rationale: String,
    pub accepted: bool,
    pub edit: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReviewQueue {
    pub level: Option<LevelTag>,
    pub patches: Vec<PatchView>,
    pub accepted: usize,
    pub min_accepted: usize,
    pub max_accepted: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SessionView {
    pub id: String,
    pub workspace: PathBuf,
    pub hypothesis_id: String,
    pub phase: Phase,
    pub agent: AgentKind,
    pub pending_question: Option<PendingQuestion>,
    pub review: ReviewQueue,
    /// The current phase's patch has been committed.
    pub committed: bool,
    pub events: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CommitResult {
    pub hypothesis_id: String,
    pub iteration: u32,
    pub level: LevelTag,
}

/// Reply to `advance` and `answer`.
#[derive(Clone, Debug, Serialize)]
pub struct StepResult {
    pub phase: Phase,
    pub question: Option<PendingQuestion>,
    /// The phase's analysis has finished and its patch awaits review.
    pub completed: bool,
}

struct LevelRun {
    outcome: LevelOutcome,
    possibilities: Option<PossibilitySet>,
    assumptions: Option<Vec<Assumption>>,
}

fn run_level(
    level: LevelTag,
    m: &ModelHypothesis,
    cfg: &IterationConfig,
    agent: &mut dyn BlueAgent,
    possibilities: Option<PossibilitySet>,
    assumptions: Option<Vec<Assumption>>,
) -> Result<LevelRun> {
    match level {
        LevelTag::PostH2 => {
            let (outcome, set) = run_h2(m, cfg, agent)?;
            Ok(LevelRun { outcome, possibilities: Some(set), assumptions: None })
        }
        LevelTag::PostH3 => {
            let (outcome, list) = run_h3(m, cfg, agent)?;
            Ok(LevelRun { outcome, possibilities: None, assumptions: Some(list) })
        }
        _ => {
            let set = match possibilities {
                Some(s) => s,
                None => ops::possibilities(m, &cfg.enumeration)?,
            };
            let list = assumptions.unwrap_or_else(|| extract_assumptions(&m.domain));
            Ok(LevelRun { outcome: run_h4(m, &set, &list, cfg, agent)?, possibilities: None, assumptions: None })
        }
    }
}

struct Worker {
    bridge: InteractiveBridge,
    handle: JoinHandle<Result<LevelRun>>,
}

struct Pending {
    level: LevelTag,
    parent: ModelHypothesis,
    patch: ModelPatch,
    transcript: Transcript,
}

struct EventLog {
    path: PathBuf,
    seq: u64,
}

impl EventLog {
    fn append(&mut self, event: &str, data: Value) -> Result<()> {
        if let Some(dir) = self.path.parent() {
            fs::create_dir_all(dir)?;
        }
        self.seq += 1;
        let at = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0);
        let mut line = json!({ "seq": self.seq, "at_ms": at, "event": event });
        if let (Value::Object(base), Value::Object(extra)) = (&mut line, data) {
            base.extend(extra);
        }
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        f.write_all(format!("{line}\n").as_bytes())?;
        f.flush()?;
        Ok(())
    }
}

pub struct Session {
    pub id: String,
    workspace: PathBuf,
    head: String,
    phase: Phase,
    kind: AgentKind,
    /// Agent reused across levels; `None` for interactive sessions, which
    /// get a fresh bridge per level.
    agent: Option<Box<dyn BlueAgent>>,
    cfg: IterationConfig,
    question: Option<PendingQuestion>,
    worker: Option<Worker>,
    pending: Option<Pending>,
    committed: bool,
    possibilities: Option<PossibilitySet>,
    assumptions: Option<Vec<Assumption>>,
    log: EventLog,
}

pub fn log_path(root: &std::path::Path, id: &str) -> PathBuf {
    root.join("sessions").join(format!("{id}.log.jsonl"))
}

impl Session {
    pub fn create(id: String, store: &Store, req: &CreateRequest) -> Result<Session> {
        if let Some(ws) = &req.workspace {
            let same = ws.canonicalize().ok() == store.root.canonicalize().ok();
            if !same {
                return Err(Error::Validation(format!(
                    "this service serves {}, not {}",
                    store.root.display(),
                    ws.display()
                )));
            }
        }
        let m = store.resolve(&req.model_id)?;
        let agent = match req.agent {
            AgentKind::Interactive => None,
            kind => Some(ops::make_agent(store, kind, req.script.as_deref())?),
        };
        let mut s = Session {
            log: EventLog { path: log_path(&store.root, &id), seq: 0 },
            id,
            workspace: store.root.clone(),
            head: m.id.clone(),
            phase: Phase::Idle,
            kind: req.agent,
            agent,
            cfg: store.iteration_config()?,
            question: None,
            worker: None,
            pending: None,
            committed: false,
            possibilities: None,
            assumptions: None,
        };
        s.log.append("created", json!({ "hypothesis_id": m.id, "agent": req.agent, "script": req.script }))?;
        Ok(s)
    }

    pub fn view(&self) -> SessionView {
        SessionView {
            id: self.id.clone(),
            workspace: self.workspace.clone(),
            hypothesis_id: self.head.clone(),
            phase: self.phase,
            agent: self.kind,
            pending_question: self.question.clone(),
            review: self.review(),
            committed: self.committed,
            events: self.log.seq,
        }
    }

    pub fn question(&self) -> Option<&PendingQuestion> {
        self.question.as_ref()
    }

    fn step(&self) -> StepResult {
        StepResult { phase: self.phase, question: self.question.clone(), completed: self.pending.is_some() }
    }

    /// Enters the next phase and runs its analysis until it finishes or an
    /// interactive question is pending.
    pub fn advance(&mut self, store: &Mutex<Store>) -> Result<StepResult> {
        if self.worker.is_some() {
            return Err(Error::Conflict("a question is pending; answer it first".into()));
        }
        if self.pending.is_some() {
            return Err(Error::Conflict("the reviewed patch has not been committed".into()));
        }
        let next = match self.phase {
            Phase::Idle => Phase::H2Review,
            Phase::H2Review => Phase::H3Review,
            Phase::H3Review => Phase::H4Dialogue,
            Phase::H4Dialogue => Phase::H2Review,
        };
        let level = next.level().expect("analysis phase");
        let m = store.lock().expect("store lock").resolve(&self.head)?;
        let (poss, assumptions) = if level == LevelTag::PostH4 {
            (self.possibilities.clone(), self.assumptions.clone())
        } else {
            (None, None)
        };
        self.phase = next;
        self.committed = false;
        self.log.append("advance", json!({ "phase": next, "hypothesis_id": m.id }))?;
        match self.agent.as_mut() {
            Some(agent) => {
                let run = run_level(level, &m, &self.cfg, agent.as_mut(), poss, assumptions);
                self.finish(run, m)?;
            }
            None => {
                let (mut agent, bridge) = InteractiveAgent::pair();
                let cfg = self.cfg.clone();
                let parent = m.clone();
                let handle = std::thread::spawn(move || run_level(level, &parent, &cfg, &mut agent, poss, assumptions));
                self.worker = Some(Worker { bridge, handle });
                self.wait(m)?;
            }
        }
        Ok(self.step())
    }

    fn finish(&mut self, run: Result<LevelRun>, parent: ModelHypothesis) -> Result<()> {
        match run {
            Ok(run) => {
                if run.possibilities.is_some() {
                    self.possibilities = run.possibilities;
                }
                if run.assumptions.is_some() {
                    self.assumptions = run.assumptions;
                }
                let LevelOutcome { patch, transcript, .. } = run.outcome;
                self.log.append(
                    "analysis-finished",
                    json!({ "level": patch.provenance.level, "proposals": patch.entries.len(), "accepted": patch.accepted_count() }),
                )?;
                self.pending = Some(Pending { level: patch.provenance.level, parent, patch, transcript });
                Ok(())
            }
            Err(e) => {
                // the phase did not happen; the session stays where it was
                self.phase = match self.phase {
                    Phase::H2Review => Phase::Idle,
                    Phase::H3Review => Phase::H2Review,
                    Phase::H4Dialogue => Phase::H3Review,
                    Phase::Idle => Phase::Idle,
                };
                self.committed = self.phase != Phase::Idle;
                self.log.append("analysis-failed", json!({ "error": e.to_string() }))?;
                Err(e)
            }
        }
    }

    /// Blocks until the worker asks a question or finishes.
    fn wait(&mut self, parent: ModelHypothesis) -> Result<()> {
        let worker = self.worker.as_ref().expect("worker running");
        match worker.bridge.questions.recv() {
            Ok(q) => {
                self.log.append("question", json!({ "node": q.node, "text": q.text }))?;
                self.question = Some(q);
                Ok(())
            }
            Err(_) => {
                let worker = self.worker.take().expect("worker running");
                let run = worker
                    .handle
                    .join()
                    .unwrap_or_else(|_| Err(Error::Internal("analysis worker panicked".into())));
                self.finish(run, parent)
            }
        }
    }

    pub fn answer(&mut self, store: &Mutex<Store>, req: &AnswerRequest) -> Result<StepResult> {
        let Some(q) = self.question.clone() else {
            return Err(Error::Conflict("no question is pending".into()));
        };
        let text = match (&req.choice, &req.text) {
            (Some(c), _) => {
                if let AnswerSchema::Choice(options) = &q.answer_schema {
                    if !options.contains(c) {
                        return Err(Error::Validation(format!("`{c}` is not one of {}", options.join(", "))));
                    }
                }
                c.clone()
            }
            (None, Some(t)) => t.clone(),
            (None, None) => return Err(Error::Validation("an answer needs `text` or `choice`".into())),
        };
        self.log.append(
            "answer",
            json!({ "node": q.node, "text": text, "normalized": normalize_answer(&q.answer_schema, &text), "edits": req.edits }),
        )?;
        let worker = self.worker.as_ref().expect("a pending question has a worker");
        worker
            .bridge
            .replies
            .send(HumanReply { text, edits: req.edits.clone() })
            .map_err(|_| Error::Internal("analysis worker stopped".into()))?;
        self.question = None;
        let parent = store.lock().expect("store lock").resolve(&self.head)?;
        self.wait(parent)?;
        Ok(self.step())
    }

    pub fn review(&self) -> ReviewQueue {
        let patches = self
            .pending
            .as_ref()
            .map(|p| {
                p.patch
                    .entries
                    .iter()
                    .enumerate()
                    .map(|(index, e)| PatchView {
                        index,
                        kind: e.edit.kind().to_string(),
                        summary: e.edit.summary(),
                        rationale: e.rationale.clone(),
                        accepted: e.accepted,
                        edit: serde_json::to_value(&e.edit).expect("edits serialize"),
                    })
                    .collect()
            })
            .unwrap_or_default();
        ReviewQueue {
            level: self.pending.as_ref().map(|p| p.level),
            accepted: self.pending.as_ref().map_or(0, |p| p.patch.accepted_count()),
            patches,
            min_accepted: MIN_MAX_ACCEPTED,
            max_accepted: self.cfg.max_accepted,
        }
    }

    pub fn set_accepted(&mut self, n: usize, accepted: bool) -> Result<ReviewQueue> {
        let max = self.cfg.max_accepted;
        let Some(p) = self.pending.as_mut() else {
            return Err(Error::Conflict("no patch is awaiting review".into()));
        };
        let count = p.patch.accepted_count();
        let entry = p.patch.entries.get_mut(n).ok_or_else(|| Error::NotFound(format!("no patch entry {n}")))?;
        if accepted && !entry.accepted && count >= max {
            return Err(Error::Validation(format!("at most {max} edits may be accepted per level")));
        }
        entry.accepted = accepted;
        self.log.append("review", json!({ "index": n, "accepted": accepted }))?;
        Ok(self.review())
    }

    /// Applies the reviewed patch and persists the new hypothesis. The
    /// workspace commit point is `lineage.json`, written last.
    pub fn commit(&mut self, store: &Mutex<Store>) -> Result<CommitResult> {
        if self.worker.is_some() {
            return Err(Error::Conflict("a question is pending; answer it first".into()));
        }
        let Some(p) = self.pending.as_ref() else {
            return Err(Error::Conflict("no patch is awaiting commit".into()));
        };
        if p.patch.accepted_count() > self.cfg.max_accepted {
            return Err(Error::Validation(format!("at most {} edits may be accepted per level", self.cfg.max_accepted)));
        }
        let child = apply_patch(&p.parent, &p.patch)?;
        let outcome = LevelOutcome { patch: p.patch.clone(), hypothesis: child.clone(), transcript: p.transcript.clone() };
        {
            let mut store = store.lock().expect("store lock");
            let saved = ops::record_level(&mut store, &outcome).and_then(|_| store.save());
            if let Err(e) = saved {
                // drop whatever did not reach disk
                if let Ok(fresh) = Store::open(&store.root) {
                    *store = fresh;
                }
                return Err(e);
            }
        }
        let level = p.level;
        self.pending = None;
        self.head = child.id.clone();
        self.committed = true;
        if level == LevelTag::PostH4 {
            self.phase = Phase::Idle;
            self.committed = false;
            self.possibilities = None;
            self.assumptions = None;
        }
        self.log.append("commit", json!({ "hypothesis_id": child.id, "iteration": child.iteration, "level": level }))?;
        Ok(CommitResult { hypothesis_id: child.id, iteration: child.iteration, level })
    }
}
