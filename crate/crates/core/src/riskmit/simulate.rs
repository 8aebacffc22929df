use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::features::FeatureSpace;
use super::utility::ActionUtilityModel;
use crate::bench::rng::{bernoulli, task_rng, uniform_index};
use crate::model::canonical::{short_hash, to_compact_string};
use crate::model::ground::resolve_action;
use crate::model::{Domain, GroundTaskSpec, State};
use crate::planner::{ground, solve, validate_on_model, Limits, Plan, Strategy, DEFAULT_MAX_GROUND_ACTIONS};

/// Where hazards come from during a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum HazardSource {
    /// Fixed `(case, onset)` pairs; the onset is the index of the step about
    /// to execute when the hazard appears.
    Scheduled { events: Vec<(String, usize)> },
    /// Each failure case occurs with probability `p` at a uniform onset.
    Stochastic { p: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub hazards: HazardSource,
    pub miss_rate: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HazardEvent {
    pub case: String,
    pub onset: usize,
    pub detected: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepOutcome {
    Executed,
    /// Executed in slow mode.
    ExecutedSlow,
    Aborted,
    /// Help cleared the detected hazards; the step then executed.
    HelpedThenExecuted,
    /// A new plan replaced the rest of the old one.
    Replanned,
    ReplanFailure,
    /// The step's preconditions did not hold.
    Blocked,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub action: String,
    pub state_digest: String,
    pub detected: Vec<String>,
    /// Empty when nothing was detected and no choice was made.
    pub utilities: Vec<f64>,
    pub chosen: Option<String>,
    pub outcome: StepOutcome,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SafetySummary {
    pub completed: bool,
    pub safe: bool,
    pub mitigations: Vec<String>,
    pub undetected: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafetyReport {
    pub run_id: String,
    pub task_id: String,
    pub actions: Vec<String>,
    pub hazards: Vec<HazardEvent>,
    pub steps: Vec<StepRecord>,
    pub summary: SafetySummary,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("plan does not solve the task: {0}")]
    InvalidPlan(String),
    #[error("miss rate {0} is outside [0, 1]")]
    BadMissRate(f64),
    #[error("hazard probability {0} is outside [0, 1]")]
    BadProbability(f64),
    #[error("unknown failure case `{0}`")]
    UnknownCase(String),
    #[error("onset {onset} of `{case}` is not below the plan length {len}")]
    OnsetOutOfRange { case: String, onset: usize, len: usize },
    #[error("utility model has dimension {found}, the domain needs {expected}")]
    DimensionMismatch { found: usize, expected: usize },
}

fn digest(state: &State) -> String {
    short_hash(to_compact_string(state).as_bytes())
}

/// Undoes a trigger: positive literals are removed, negated ones restored.
fn clear(domain: &Domain, case: &str, state: &mut State) {
    if let Some(c) = domain.failure_case(case) {
        for lit in &c.trigger {
            if lit.positive {
                state.remove(&lit.atom);
            } else {
                state.insert(lit.atom.clone());
            }
        }
    }
}

fn replan(domain: &Domain, task: &GroundTaskSpec, state: &State) -> Option<Plan> {
    let mut spec = task.clone();
    spec.init = state.clone();
    let g = ground(domain, &spec, DEFAULT_MAX_GROUND_ACTIONS).ok()?;
    [Strategy::GbfsHadd, Strategy::AstarHmax]
        .iter()
        .find_map(|&s| solve(&g, s, Limits::expansions(200_000)).plan().cloned())
}

fn schedule(domain: &Domain, plan_len: usize, cfg: &SimConfig, task_id: &str) -> Result<Vec<HazardEvent>, SimError> {
    let mut rng = task_rng(cfg.seed, task_id, 0);
    let mut events: Vec<(String, usize)> = match &cfg.hazards {
        HazardSource::Scheduled { events } => {
            for (case, onset) in events {
                if domain.failure_case(case).is_none() {
                    return Err(SimError::UnknownCase(case.clone()));
                }
                if *onset >= plan_len {
                    return Err(SimError::OnsetOutOfRange { case: case.clone(), onset: *onset, len: plan_len });
                }
            }
            events.clone()
        }
        HazardSource::Stochastic { p } => {
            if !(0.0..=1.0).contains(p) {
                return Err(SimError::BadProbability(*p));
            }
            let mut out = Vec::new();
            if plan_len > 0 {
                for c in &domain.failure_cases {
                    if bernoulli(&mut rng, *p) {
                        out.push((c.name.clone(), uniform_index(&mut rng, plan_len)));
                    }
                }
            }
            out
        }
    };
    events.sort_by(|a, b| (a.1, &a.0).cmp(&(b.1, &b.0)));
    Ok(events
        .into_iter()
        .map(|(case, onset)| HazardEvent { case, onset, detected: !bernoulli(&mut rng, cfg.miss_rate) })
        .collect())
}

/// Executes `plan` on `task`, injecting hazards and reacting to the detected
/// ones with the model's chosen mitigation.
///
/// A hazard is injected by asserting its trigger before the step at its
/// onset, unless its trigger already holds. If it is detected, one choice is
/// made for all hazards detected at that step:
///
/// * `proceed` runs the step; `slow-mode` runs it flagged as slow
/// * `abort` stops the run, safe but not completed
/// * `request-help` undoes the detected triggers, then runs the step
/// * `replan` searches from the current state and continues with the new plan
///
/// A step whose preconditions fail, or a failed replan, ends the run unsafe.
/// Running out of plan without reaching the goal is also unsafe.
pub fn simulate_execution(
    domain: &Domain,
    task: &GroundTaskSpec,
    plan: &Plan,
    cfg: &SimConfig,
    model: &ActionUtilityModel,
) -> Result<SafetyReport, SimError> {
    if !(0.0..=1.0).contains(&cfg.miss_rate) {
        return Err(SimError::BadMissRate(cfg.miss_rate));
    }
    validate_on_model(domain, task, plan).map_err(|d| SimError::InvalidPlan(d.to_string()))?;
    let space = FeatureSpace::from_domain(domain);
    if model.dim() != space.dim() {
        return Err(SimError::DimensionMismatch { found: model.dim(), expected: space.dim() });
    }
    let hazards = schedule(domain, plan.len(), cfg, &task.id)?;
    let objects = task.object_table(domain);

    let mut state = task.init.clone();
    let mut steps_left: Vec<_> = plan.steps.clone();
    steps_left.reverse();
    let mut steps = Vec::new();
    let mut mitigations = Vec::new();
    let mut safe = true;
    let mut completed = false;
    let mut executed = 0usize;
    let mut fired_upto = 0usize;
    let mut undetected = Vec::new();

    loop {
        let Some(action) = steps_left.last().cloned() else {
            completed = state.satisfies(&task.goal);
            safe = completed;
            break;
        };
        let mut detected = Vec::new();
        // after a replan the same index comes round again; hazards fire once
        if executed >= fired_upto {
            fired_upto = executed + 1;
            for h in hazards.iter().filter(|h| h.onset == executed) {
                let case = domain.failure_case(&h.case).expect("scheduled cases exist");
                // a hazard already present is part of the task the plan solves
                if case.is_active(&state) {
                    continue;
                }
                case.inject(&mut state);
                if h.detected {
                    detected.push(h.case.clone());
                } else {
                    undetected.push(h.case.clone());
                }
            }
        }
        let mut record = StepRecord {
            index: executed,
            action: action.to_string(),
            state_digest: digest(&state),
            detected: detected.clone(),
            utilities: Vec::new(),
            chosen: None,
            outcome: StepOutcome::Executed,
        };
        let mut slow = false;
        if !detected.is_empty() {
            let x = space.featurize(&detected, executed as f64 / (executed + steps_left.len()) as f64);
            let u = model.predict_utilities(&x).expect("dimension checked");
            let choice = model.actions[ActionUtilityModel::select_index(&u)].clone();
            record.utilities = u;
            record.chosen = Some(choice.clone());
            if choice != "proceed" {
                mitigations.push(choice.clone());
            }
            match choice.as_str() {
                "abort" => {
                    record.outcome = StepOutcome::Aborted;
                    steps.push(record);
                    break;
                }
                "slow-mode" => slow = true,
                "request-help" => {
                    for c in &detected {
                        clear(domain, c, &mut state);
                    }
                    record.outcome = StepOutcome::HelpedThenExecuted;
                }
                "replan" => match replan(domain, task, &state) {
                    Some(p) => {
                        record.outcome = StepOutcome::Replanned;
                        steps.push(record);
                        steps_left = p.steps.into_iter().rev().collect();
                        continue;
                    }
                    None => {
                        record.outcome = StepOutcome::ReplanFailure;
                        steps.push(record);
                        safe = false;
                        break;
                    }
                },
                _ => {}
            }
        }
        let ok = resolve_action(domain, &objects, &action).ok().filter(|g| g.applicable(&state));
        match ok {
            Some(g) => {
                state = g.apply(&state);
                if slow {
                    record.outcome = StepOutcome::ExecutedSlow;
                }
                steps.push(record);
                steps_left.pop();
                executed += 1;
            }
            None => {
                record.outcome = StepOutcome::Blocked;
                steps.push(record);
                safe = false;
                break;
            }
        }
    }

    let mut report = SafetyReport {
        run_id: String::new(),
        task_id: task.id.clone(),
        actions: model.actions.clone(),
        hazards,
        steps,
        summary: SafetySummary { completed, safe, mitigations, undetected },
    };
    report.run_id = short_hash(to_compact_string(&(&report, cfg, &model.weights)).as_bytes());
    Ok(report)
}

impl SafetyReport {
    /// Every recorded choice is the first maximum of its utilities.
    pub fn is_consistent(&self) -> bool {
        self.steps.iter().all(|s| match &s.chosen {
            Some(c) => !s.utilities.is_empty() && self.actions[ActionUtilityModel::select_index(&s.utilities)] == *c,
            None => s.utilities.is_empty(),
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("run {} on task {}\n", self.run_id, self.task_id);
        for h in &self.hazards {
            let _ = writeln!(
                out,
                "hazard {} at step {} ({})",
                h.case,
                h.onset,
                if h.detected { "detected" } else { "missed" }
            );
        }
        for s in &self.steps {
            let _ = write!(out, "{:>3}  {:<40}  [{}]  {:?}", s.index, s.action, s.state_digest, s.outcome);
            if let Some(c) = &s.chosen {
                let us: Vec<String> =
                    self.actions.iter().zip(&s.utilities).map(|(a, u)| format!("{a}={u:.3}")).collect();
                let _ = write!(out, "  detected {}  chose {c}  ({})", s.detected.join(","), us.join(" "));
            }
            out.push('\n');
        }
        let s = &self.summary;
        let verdict = match (s.completed, s.safe) {
            (true, true) => "completed safely",
            (false, true) => "stopped safely",
            _ => "unsafe",
        };
        let _ = writeln!(out, "{verdict}; mitigations: {}", if s.mitigations.is_empty() { "none".into() } else { s.mitigations.join(", ") });
        if !s.undetected.is_empty() {
            let _ = writeln!(out, "undetected: {}", s.undetected.join(", "));
        }
        out
    }
}
