//! Blue-team agents answering red-team questions and proposing edits.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::mpsc::{self, Receiver, SyncSender};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dialogue::AnswerSchema;
use crate::model::canonical::SCHEMA_VERSION;
use crate::model::{Edit, LevelTag};

/// Node id used when judging a possibility during the H2 analysis.
pub const H2_JUDGE: &str = "h2.judge";
/// Node id used when asking whether an assumption is challenged (H3).
pub const H3_CHALLENGE: &str = "h3.challenge";
/// Node id of edit review questions sent to an interactive agent.
pub const REVIEW: &str = "review";

/// What the agent knows about the question being asked.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentContext {
    pub domain: String,
    pub node: String,
    pub iteration: u32,
    pub level: Option<LevelTag>,
    #[serde(default)]
    pub slots: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_schema: Option<AnswerSchema>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub edit: Edit,
    #[serde(default)]
    pub rationale: String,
}

/// Edit text the agent produced that does not parse as an edit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalformedEdit {
    pub raw: String,
    pub reason: String,
}

pub type Proposed = Result<Proposal, MalformedEdit>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("agent unavailable: {0}")]
    Unavailable(String),
}

pub trait BlueAgent: Send {
    fn answer(&mut self, question: &str, ctx: &AgentContext) -> Result<String, AgentError>;

    /// Edits suggested in response to the question last answered.
    fn propose_modifications(&mut self, ctx: &AgentContext) -> Result<Vec<Proposed>, AgentError>;

    /// Human accept/reject decision for one proposal.
    fn review(&mut self, _proposal: &Proposal, _ctx: &AgentContext) -> Result<bool, AgentError> {
        Ok(true)
    }
}

fn parse_edit(value: &serde_json::Value) -> Proposed {
    let rationale = value.get("rationale").and_then(|r| r.as_str()).unwrap_or_default().to_string();
    let mut bare = value.clone();
    if let Some(obj) = bare.as_object_mut() {
        obj.remove("rationale");
    }
    serde_json::from_value::<Edit>(bare)
        .map(|edit| Proposal { edit, rationale })
        .map_err(|e| MalformedEdit { raw: value.to_string(), reason: e.to_string() })
}

/// One entry of a `*.blue.json` script.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptRule {
    pub node: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iteration: Option<u32>,
    /// Slot name to substring that must occur in the slot value.
    #[serde(default)]
    pub when: BTreeMap<String, String>,
    #[serde(default)]
    pub once: bool,
    pub answer: String,
    /// Kept as raw JSON so malformed edits surface in the transcript.
    #[serde(default)]
    pub edits: Vec<serde_json::Value>,
    #[serde(default = "yes")]
    pub accept: bool,
}

fn yes() -> bool {
    true
}

fn default_answer() -> String {
    "no".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Script {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_answer")]
    pub default_answer: String,
    /// Per-node answers used when no rule matches.
    #[serde(default)]
    pub defaults: BTreeMap<String, String>,
    #[serde(default)]
    pub rules: Vec<ScriptRule>,
}

impl Script {
    /// Answers "valid" to every judgment, "no" to everything else, proposes nothing.
    pub fn no_op() -> Self {
        Script {
            schema_version: SCHEMA_VERSION,
            name: "no-op".into(),
            default_answer: default_answer(),
            defaults: BTreeMap::from([
                (H2_JUDGE.to_string(), "valid".to_string()),
                (H3_CHALLENGE.to_string(), "no".to_string()),
            ]),
            rules: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let script: Script = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if script.schema_version != SCHEMA_VERSION {
            return Err(format!("unsupported script schema_version {}", script.schema_version));
        }
        Ok(script)
    }
}

/// Deterministic lookup-table agent.
///
/// The first rule whose node, iteration and slot matchers fit the question
/// supplies the answer; its edits are returned by the next
/// `propose_modifications` call. `once` rules fire at most one time.
#[derive(Clone, Debug)]
pub struct ScriptedAgent {
    script: Script,
    fired: BTreeSet<usize>,
    current: Option<usize>,
}

impl ScriptedAgent {
    pub fn new(script: Script) -> Self {
        ScriptedAgent { script, fired: BTreeSet::new(), current: None }
    }

    pub fn no_op() -> Self {
        ScriptedAgent::new(Script::no_op())
    }

    fn matches(rule: &ScriptRule, ctx: &AgentContext) -> bool {
        rule.node == ctx.node
            && rule.iteration.is_none_or(|i| i == ctx.iteration)
            && rule
                .when
                .iter()
                .all(|(slot, pat)| ctx.slots.get(slot).is_some_and(|v| v.contains(pat.as_str())))
    }
}

impl BlueAgent for ScriptedAgent {
    fn answer(&mut self, _question: &str, ctx: &AgentContext) -> Result<String, AgentError> {
        self.current = self
            .script
            .rules
            .iter()
            .enumerate()
            .position(|(i, r)| !(r.once && self.fired.contains(&i)) && Self::matches(r, ctx));
        if let Some(i) = self.current {
            self.fired.insert(i);
            return Ok(self.script.rules[i].answer.clone());
        }
        Ok(self.script.defaults.get(&ctx.node).unwrap_or(&self.script.default_answer).clone())
    }

    fn propose_modifications(&mut self, _ctx: &AgentContext) -> Result<Vec<Proposed>, AgentError> {
        Ok(match self.current {
            Some(i) => self.script.rules[i].edits.iter().map(parse_edit).collect(),
            None => Vec::new(),
        })
    }

    fn review(&mut self, _proposal: &Proposal, _ctx: &AgentContext) -> Result<bool, AgentError> {
        Ok(self.current.is_none_or(|i| self.script.rules[i].accept))
    }
}

/// Question waiting for a human, as seen by the CLI or the HTTP service.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingQuestion {
    pub node: String,
    pub text: String,
    pub answer_schema: AnswerSchema,
    pub context: AgentContext,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HumanReply {
    pub text: String,
    /// Raw edit JSON to propose alongside the answer.
    #[serde(default)]
    pub edits: Vec<serde_json::Value>,
}

/// Agent that forwards every question to a human through a channel pair.
pub struct InteractiveAgent {
    questions: SyncSender<PendingQuestion>,
    replies: Receiver<HumanReply>,
    last: Option<HumanReply>,
}

/// Consumer end of an [`InteractiveAgent`].
pub struct InteractiveBridge {
    pub questions: Receiver<PendingQuestion>,
    pub replies: SyncSender<HumanReply>,
}

impl InteractiveAgent {
    pub fn pair() -> (InteractiveAgent, InteractiveBridge) {
        let (qtx, qrx) = mpsc::sync_channel(1);
        let (rtx, rrx) = mpsc::sync_channel(1);
        (
            InteractiveAgent { questions: qtx, replies: rrx, last: None },
            InteractiveBridge { questions: qrx, replies: rtx },
        )
    }

    fn ask(&mut self, text: &str, ctx: &AgentContext, schema: AnswerSchema) -> Result<HumanReply, AgentError> {
        let q = PendingQuestion { node: ctx.node.clone(), text: text.to_string(), answer_schema: schema, context: ctx.clone() };
        self.questions.send(q).map_err(|_| AgentError::Unavailable("question queue closed".into()))?;
        self.replies.recv().map_err(|_| AgentError::Unavailable("reply queue closed".into()))
    }
}

impl BlueAgent for InteractiveAgent {
    fn answer(&mut self, question: &str, ctx: &AgentContext) -> Result<String, AgentError> {
        let schema = ctx.answer_schema.clone().unwrap_or(AnswerSchema::FreeText);
        let reply = self.ask(question, ctx, schema)?;
        let text = reply.text.clone();
        self.last = Some(reply);
        Ok(text)
    }

    fn propose_modifications(&mut self, _ctx: &AgentContext) -> Result<Vec<Proposed>, AgentError> {
        Ok(self.last.take().map(|r| r.edits.iter().map(parse_edit).collect()).unwrap_or_default())
    }

    fn review(&mut self, proposal: &Proposal, ctx: &AgentContext) -> Result<bool, AgentError> {
        let mut rctx = ctx.clone();
        rctx.node = REVIEW.into();
        rctx.slots.insert("edit".into(), proposal.edit.summary());
        let text = format!("Accept `{}`? {}", proposal.edit.summary(), proposal.rationale);
        let reply = self.ask(text.trim_end(), &rctx, AnswerSchema::YesNo)?;
        Ok(super::dialogue::normalize_answer(&AnswerSchema::YesNo, &reply.text) == "yes")
    }
}

/// Connection settings of a [`RemoteTextAgent`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemoteConfig {
    pub url: String,
    pub key: Option<String>,
    pub timeout: Duration,
}

impl RemoteConfig {
    /// Reads `HRRT_AGENT_URL`, `HRRT_AGENT_KEY` and `HRRT_AGENT_TIMEOUT_MS`.
    pub fn from_env() -> Result<Self, AgentError> {
        let url = std::env::var("HRRT_AGENT_URL").map_err(|_| AgentError::Unavailable("HRRT_AGENT_URL is not set".into()))?;
        let timeout = std::env::var("HRRT_AGENT_TIMEOUT_MS")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(30_000);
        Ok(RemoteConfig { url, key: std::env::var("HRRT_AGENT_KEY").ok(), timeout: Duration::from_millis(timeout) })
    }
}

#[derive(Serialize)]
struct RemoteRequest<'a> {
    prompt: String,
    context: &'a AgentContext,
}

#[derive(Deserialize)]
struct RemoteResponse {
    text: String,
}

/// Agent backed by an HTTP text-generation endpoint.
///
/// The endpoint receives `{prompt, context}` and returns `{text}`. Edits are
/// read from fenced code blocks in the returned text.
pub struct RemoteTextAgent {
    config: RemoteConfig,
    agent: ureq::Agent,
    last_text: String,
}

pub fn render_prompt(question: &str, ctx: &AgentContext) -> String {
    format!(
        "You are the blue team reviewing a symbolic planning model of the `{}` domain.\n\
         Question: {question}\n\
         Answer on the first line. If the model should change, add the edits as a JSON array \
         inside a ```json fenced block, one object per edit with an \"op\" field.\n",
        ctx.domain
    )
}

/// Splits agent text into the prose answer and the contents of fenced blocks.
pub fn split_fenced(text: &str) -> (String, Vec<String>) {
    let mut prose = String::new();
    let mut blocks = Vec::new();
    let mut current: Option<String> = None;
    for line in text.lines() {
        if line.trim_start().starts_with("```") {
            match current.take() {
                Some(block) => blocks.push(block),
                None => current = Some(String::new()),
            }
            continue;
        }
        match current.as_mut() {
            Some(block) => {
                block.push_str(line);
                block.push('\n');
            }
            None => {
                prose.push_str(line);
                prose.push('\n');
            }
        }
    }
    if let Some(block) = current {
        blocks.push(block);
    }
    (prose.trim().to_string(), blocks)
}

/// Parses fenced blocks into proposals; each unparseable piece becomes one
/// [`MalformedEdit`].
pub fn parse_fenced_edits(blocks: &[String]) -> Vec<Proposed> {
    let mut out = Vec::new();
    for block in blocks {
        match serde_json::from_str::<serde_json::Value>(block) {
            Ok(serde_json::Value::Array(items)) => out.extend(items.iter().map(parse_edit)),
            Ok(serde_json::Value::Object(obj)) if obj.contains_key("edits") => match &obj["edits"] {
                serde_json::Value::Array(items) => out.extend(items.iter().map(parse_edit)),
                other => out.push(Err(MalformedEdit { raw: other.to_string(), reason: "`edits` is not an array".into() })),
            },
            Ok(value) => out.push(parse_edit(&value)),
            Err(e) => out.push(Err(MalformedEdit { raw: block.trim().to_string(), reason: e.to_string() })),
        }
    }
    out
}

impl RemoteTextAgent {
    pub fn new(config: RemoteConfig) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(config.timeout)).build().into();
        RemoteTextAgent { config, agent, last_text: String::new() }
    }

    pub fn from_env() -> Result<Self, AgentError> {
        Ok(RemoteTextAgent::new(RemoteConfig::from_env()?))
    }

    fn call(&self, prompt: String, ctx: &AgentContext) -> Result<String, AgentError> {
        let mut req = self.agent.post(&self.config.url);
        if let Some(key) = &self.config.key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(RemoteRequest { prompt, context: ctx })
            .map_err(|e| AgentError::Unavailable(e.to_string()))?;
        let body: RemoteResponse = resp.body_mut().read_json().map_err(|e| AgentError::Unavailable(e.to_string()))?;
        Ok(body.text)
    }
}

impl BlueAgent for RemoteTextAgent {
    fn answer(&mut self, question: &str, ctx: &AgentContext) -> Result<String, AgentError> {
        self.last_text = self.call(render_prompt(question, ctx), ctx)?;
        let (prose, _) = split_fenced(&self.last_text);
        Ok(prose.lines().next().unwrap_or_default().trim().to_string())
    }

    fn propose_modifications(&mut self, _ctx: &AgentContext) -> Result<Vec<Proposed>, AgentError> {
        let (_, blocks) = split_fenced(&std::mem::take(&mut self.last_text));
        Ok(parse_fenced_edits(&blocks))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(node: &str, iteration: u32, slots: &[(&str, &str)]) -> AgentContext {
        AgentContext {
            domain: "d".into(),
            node: node.into(),
            iteration,
            slots: slots.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn scripted_rules_match_on_node_iteration_and_slots() {
        let script = Script::from_json(
            r#"{"schema_version": 1, "defaults": {"h2.judge": "valid"},
                "rules": [{"node": "h2.judge", "iteration": 1, "when": {"action": "open"}, "once": true,
                           "answer": "invalid",
                           "edits": [{"op": "remove-action", "name": "open", "rationale": "unsafe"},
                                     {"op": "explode"}]}]}"#,
        )
        .unwrap();
        let mut agent = ScriptedAgent::new(script);
        assert_eq!(agent.answer("q", &ctx("h2.judge", 2, &[("action", "(open d)")])).unwrap(), "valid");
        assert!(agent.propose_modifications(&ctx("h2.judge", 2, &[])).unwrap().is_empty());
        assert!(agent.propose_modifications(&ctx("h2.judge", 2, &[])).unwrap().is_empty());
        let c = ctx("h2.judge", 1, &[("action", "(open d)")]);
        assert_eq!(agent.answer("q", &c).unwrap(), "invalid");
        let props = agent.propose_modifications(&c).unwrap();
        assert_eq!(props.len(), 2);
        assert_eq!(props[0].as_ref().unwrap().rationale, "unsafe");
        assert!(props[1].is_err());
        // once
        assert_eq!(agent.answer("q", &c).unwrap(), "valid");
        assert_eq!(agent.answer("q", &ctx("other", 1, &[])).unwrap(), "no");
    }

    #[test]
    fn fenced_block_parsing() {
        let text = "yes, add it\n```json\n[{\"op\": \"remove-action\", \"name\": \"a\"}]\n```\n```\nnot json\n```";
        let (prose, blocks) = split_fenced(text);
        assert_eq!(prose, "yes, add it");
        let edits = parse_fenced_edits(&blocks);
        assert_eq!(edits.len(), 2);
        assert_eq!(edits[0].as_ref().unwrap().edit, Edit::RemoveAction { name: "a".into() });
        assert!(edits[1].is_err());
    }

    #[test]
    fn interactive_round_trip() {
        let (mut agent, bridge) = InteractiveAgent::pair();
        let worker = std::thread::spawn(move || {
            let a = agent.answer("Is it safe?", &ctx("n", 0, &[])).unwrap();
            let p = agent.propose_modifications(&ctx("n", 0, &[])).unwrap();
            (a, p.len())
        });
        let q = bridge.questions.recv().unwrap();
        assert_eq!(q.text, "Is it safe?");
        bridge
            .replies
            .send(HumanReply { text: "no".into(), edits: vec![serde_json::json!({"op": "remove-action", "name": "x"})] })
            .unwrap();
        assert_eq!(worker.join().unwrap(), ("no".to_string(), 1));
    }

    #[test]
    fn remote_agent_unreachable_is_unavailable() {
        let mut agent = RemoteTextAgent::new(RemoteConfig {
            url: "http://127.0.0.1:9/generate".into(),
            key: None,
            timeout: Duration::from_millis(200),
        });
        assert!(matches!(agent.answer("q", &ctx("n", 0, &[])), Err(AgentError::Unavailable(_))));
    }
}
