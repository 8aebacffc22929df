//! Workspace operations shared by the CLI commands and the HTTP endpoints.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use hrrt_core::bench::{
    evaluate, generate_tasks_with, lineage_hypotheses, PlannerConfig, SuccessReport, TaskBatch,
    DEFAULT_INCLUSION_PROBABILITY,
};
use hrrt_core::hrrt::{
    enumerate_possibilities, extract_assumptions, iterate_workspace, run_h4, Assumption, BlueAgent, EnumerationConfig,
    LevelOutcome, PossibilitySet, RemoteTextAgent, ScriptedAgent,
};
use hrrt_core::model::canonical::{to_canonical_string, versioned};
use hrrt_core::model::workspace::{atomic_write, report_dir};
use hrrt_core::model::{GroundTaskSpec, ModelHypothesis};
use hrrt_core::pddl;
use hrrt_core::planner::{ground, solve, GroundingError, Limits, Plan, SolveOutcome, Strategy, DEFAULT_MAX_GROUND_ACTIONS};
use hrrt_core::riskmit::{
    simulate_execution, train_for_domain, weights_path, ActionUtilityModel, FeatureSpace, HazardSource, SafetyReport,
    SimConfig,
};

use crate::error::{Error, Result};
use crate::store::Store;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    Scripted,
    Interactive,
    Remote,
}

impl FromStr for AgentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scripted" => Ok(AgentKind::Scripted),
            "interactive" => Ok(AgentKind::Interactive),
            "remote" => Ok(AgentKind::Remote),
            _ => Err(Error::Usage(format!("unknown agent `{s}` (expected scripted, interactive or remote)"))),
        }
    }
}

/// A non-interactive agent; interactive agents are driven by a bridge.
pub fn make_agent(store: &Store, kind: AgentKind, script: Option<&str>) -> Result<Box<dyn BlueAgent>> {
    match kind {
        AgentKind::Scripted => Ok(Box::new(ScriptedAgent::new(store.script(script)?))),
        AgentKind::Remote => {
            Ok(Box::new(RemoteTextAgent::from_env().map_err(|e| Error::Usage(e.to_string()))?))
        }
        AgentKind::Interactive => Err(Error::Usage("the interactive agent needs a question bridge".into())),
    }
}

pub fn analysis_path(root: &Path, id: &str, kind: &str) -> PathBuf {
    root.join("analyses").join(format!("{id}.{kind}.json"))
}

/// Unjudged possibilities of a hypothesis from its initial templates.
pub fn possibilities(m: &ModelHypothesis, cfg: &EnumerationConfig) -> Result<PossibilitySet> {
    Ok(enumerate_possibilities(&m.domain, &m.domain.initial_templates, cfg)?)
}

/// Runs the possibility analysis and writes `analyses/<id>.possibilities.json`.
pub fn analyze_h2(store: &Store, reference: &str, cfg: &EnumerationConfig) -> Result<(ModelHypothesis, PossibilitySet)> {
    let m = store.resolve(reference)?;
    let set = possibilities(&m, cfg)?;
    atomic_write(
        &analysis_path(&store.root, &m.id, "possibilities"),
        to_canonical_string(&versioned("possibilities", &set)).as_bytes(),
    )?;
    Ok((m, set))
}

/// Runs the assumption analysis and writes `analyses/<id>.assumptions.json`.
pub fn analyze_h3(store: &Store, reference: &str) -> Result<(ModelHypothesis, Vec<Assumption>)> {
    let m = store.resolve(reference)?;
    let list = extract_assumptions(&m.domain);
    atomic_write(
        &analysis_path(&store.root, &m.id, "assumptions"),
        to_canonical_string(&versioned("assumptions", &list)).as_bytes(),
    )?;
    Ok((m, list))
}

/// Adds a level's hypothesis, patch and transcript to the in-memory workspace.
pub fn record_level(store: &mut Store, level: &LevelOutcome) -> Result<()> {
    store.ws.lineage.insert_child(level.hypothesis.clone(), level.patch.clone())?;
    let key = format!("{}.{}", level.hypothesis.id, level.hypothesis.level.as_str());
    store.ws.transcripts.insert(key, level.transcript.clone());
    Ok(())
}

/// Reflection alone: H4 over the unjudged analyses of `reference`. The
/// resulting hypothesis is committed.
pub fn reflect(store: &mut Store, reference: &str, agent: &mut dyn BlueAgent) -> Result<LevelOutcome> {
    let m = store.resolve(reference)?;
    let cfg = store.iteration_config()?;
    let set = possibilities(&m, &cfg.enumeration)?;
    let assumptions = extract_assumptions(&m.domain);
    let out = run_h4(&m, &set, &assumptions, &cfg, agent)?;
    record_level(store, &out)?;
    store.save()?;
    Ok(out)
}

/// `k` full iterations from `reference`; returns the final post-H4 hypothesis.
pub fn iterate(store: &mut Store, reference: &str, k: usize, agent: &mut dyn BlueAgent) -> Result<ModelHypothesis> {
    let m = store.resolve(reference)?;
    let cfg = store.iteration_config()?;
    let head = iterate_workspace(&mut store.ws, &m.id, k, &cfg, agent)?;
    store.save()?;
    Ok(head)
}

/// Tasks built from the template pairs of a model, `t<i>-g<j>`.
pub fn template_tasks(m: &ModelHypothesis) -> Vec<GroundTaskSpec> {
    let d = &m.domain;
    let mut out = Vec::new();
    for (i, init) in d.initial_templates.iter().enumerate() {
        for (j, goal) in d.goal_templates.iter().enumerate() {
            out.push(GroundTaskSpec::new(&format!("t{i}-g{j}"), init.clone(), goal.clone()));
        }
    }
    out
}

/// Writes `<name>.domain.pddl` and one problem per template pair under
/// `out` (default `pddl/<id>/` in the workspace).
pub fn export_pddl(store: &Store, reference: &str, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let m = store.resolve(reference)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| store.root.join("pddl").join(&m.id));
    let mut written = Vec::new();
    let domain_path = dir.join(format!("{}.domain.pddl", m.domain.name));
    atomic_write(&domain_path, pddl::emit_domain(&m.domain)?.as_bytes())?;
    written.push(domain_path);
    for task in template_tasks(&m) {
        let path = dir.join(format!("{}.problem.pddl", task.id));
        atomic_write(&path, pddl::emit_problem(&m.domain, &task)?.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannerOptions {
    #[serde(default)]
    pub strategy: Option<Strategy>,
    #[serde(default)]
    pub max_expansions: Option<u64>,
    #[serde(default)]
    pub max_time_ms: Option<u64>,
}

impl PlannerOptions {
    pub fn config(&self) -> PlannerConfig {
        let mut cfg = PlannerConfig { strategy: self.strategy, ..PlannerConfig::default() };
        if let Some(n) = self.max_expansions {
            cfg.limits.max_expansions = Some(n);
        }
        if let Some(ms) = self.max_time_ms {
            cfg.limits.max_time = Some(Duration::from_millis(ms));
        }
        cfg
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "outcome")]
pub enum PlanResult {
    Solved { plan: Plan },
    Unsolvable,
    ResourceLimit { expansions: u64, elapsed_ms: u64 },
}

/// Plans for a PDDL domain and problem.
pub fn plan_pddl(domain_text: &str, problem_text: &str, strategy: Strategy, limits: Limits) -> Result<PlanResult> {
    let domain = pddl::parse_domain(domain_text)?;
    let task = pddl::parse_problem(problem_text, &domain)?;
    let g = ground(&domain, &task, DEFAULT_MAX_GROUND_ACTIONS).map_err(|e| match e {
        GroundingError::GroundingExplosion { .. } => Error::ResourceLimit(e.to_string()),
        GroundingError::InvalidTask(_) => Error::Validation(e.to_string()),
    })?;
    Ok(match solve(&g, strategy, limits) {
        SolveOutcome::Solved(plan) => PlanResult::Solved { plan },
        SolveOutcome::Unsolvable => PlanResult::Unsolvable,
        SolveOutcome::ResourceLimit { expansions, elapsed } => {
            PlanResult::ResourceLimit { expansions, elapsed_ms: elapsed.as_millis() as u64 }
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRequest {
    /// One id evaluates its whole chain from the seed; several ids are
    /// evaluated as given. Tasks come from the last one.
    pub model_ids: Vec<String>,
    pub n: usize,
    pub seed: u64,
    #[serde(default)]
    pub planner: PlannerOptions,
    #[serde(default)]
    pub inclusion_probability: Option<f64>,
}

pub struct BenchJob {
    pub hypotheses: Vec<ModelHypothesis>,
    pub batch: TaskBatch,
    pub config: PlannerConfig,
}

impl BenchJob {
    pub fn run(&self) -> SuccessReport {
        evaluate(&self.hypotheses, &self.batch, &self.config)
    }
}

pub fn prepare_bench(store: &Store, req: &BenchRequest) -> Result<BenchJob> {
    let hypotheses = match req.model_ids.as_slice() {
        [] => return Err(Error::Validation("model_ids is empty".into())),
        [one] => {
            let head = store.resolve(one)?;
            lineage_hypotheses(&store.ws.lineage, &head.id)?
        }
        many => many.iter().map(|r| store.resolve(r)).collect::<Result<Vec<_>>>()?,
    };
    let last = hypotheses.last().expect("nonempty");
    let p = req.inclusion_probability.unwrap_or(DEFAULT_INCLUSION_PROBABILITY);
    let batch = generate_tasks_with(last, req.n, req.seed, p).map_err(|e| Error::Validation(e.to_string()))?;
    Ok(BenchJob { hypotheses, batch, config: req.planner.config() })
}

/// Writes the batch and commits the report to the workspace.
pub fn record_report(store: &mut Store, batch: &TaskBatch, report: &SuccessReport) -> Result<()> {
    atomic_write(
        &report_dir(&store.root, &batch.id).join("batch.json"),
        to_canonical_string(&versioned("batch", batch)).as_bytes(),
    )?;
    store.ws.reports.insert(report.batch_id.clone(), report.clone());
    store.save()
}

pub fn bench(store: &mut Store, req: &BenchRequest) -> Result<SuccessReport> {
    let job = prepare_bench(store, req)?;
    let report = job.run();
    record_report(store, &job.batch, &report)?;
    Ok(report)
}

fn default_hazards() -> HazardSource {
    HazardSource::Stochastic { p: 0.5 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateRequest {
    pub model_id: String,
    /// Defaults to the first initial and goal templates.
    #[serde(default)]
    pub task: Option<GroundTaskSpec>,
    pub miss_rate: f64,
    pub seed: u64,
    #[serde(default = "default_hazards")]
    pub hazards: HazardSource,
}

/// Loads `riskmit/<id>.weights.json`, training and writing it first when absent.
pub fn policy_for(store: &Store, m: &ModelHypothesis) -> Result<ActionUtilityModel> {
    let path = weights_path(&store.root, &m.id);
    if path.exists() {
        return Ok(ActionUtilityModel::from_weights_json(&fs::read_to_string(&path)?)?);
    }
    let model = train_for_domain(&m.domain)?;
    atomic_write(&path, model.to_weights_json(&FeatureSpace::from_domain(&m.domain)).as_bytes())?;
    Ok(model)
}

pub fn exec_report_path(root: &Path, run_id: &str, ext: &str) -> PathBuf {
    root.join("reports").join("exec").join(format!("{run_id}.safety.{ext}"))
}

/// Plans the task, simulates execution under the model's policy and writes
/// `reports/exec/<run-id>.safety.json` and `.txt`.
pub fn simulate(store: &Store, req: &SimulateRequest) -> Result<SafetyReport> {
    let m = store.resolve(&req.model_id)?;
    let task = match &req.task {
        Some(t) => t.clone(),
        None => template_tasks(&m)
            .into_iter()
            .next()
            .ok_or_else(|| Error::Validation(format!("{} has no task templates", m.id)))?,
    };
    task.check(&m.domain).map_err(Error::Validation)?;
    let g = ground(&m.domain, &task, DEFAULT_MAX_GROUND_ACTIONS).map_err(|e| Error::ResourceLimit(e.to_string()))?;
    let plan = [Strategy::GbfsHadd, Strategy::AstarHmax]
        .iter()
        .find_map(|&s| solve(&g, s, PlannerConfig::default().limits).plan().cloned())
        .ok_or_else(|| Error::Validation(format!("no plan found for task {}", task.id)))?;
    let policy = policy_for(store, &m)?;
    let cfg = SimConfig { hazards: req.hazards.clone(), miss_rate: req.miss_rate, seed: req.seed };
    let report = simulate_execution(&m.domain, &task, &plan, &cfg, &policy)?;
    atomic_write(
        &exec_report_path(&store.root, &report.run_id, "json"),
        to_canonical_string(&versioned("safety_report", &report)).as_bytes(),
    )?;
    atomic_write(&exec_report_path(&store.root, &report.run_id, "txt"), report.to_text().as_bytes())?;
    Ok(report)
}
