use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::task::GroundTask;
use crate::model::ground::resolve_action;
use crate::model::{ActionRef, Domain, GroundTaskSpec};

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<ActionRef>,
}

impl Plan {
    pub fn new(steps: Vec<ActionRef>) -> Self {
        Plan { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Plan file text: `; length=N` then one `(action args)` per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("; length={}\n", self.len());
        for s in &self.steps {
            out.push_str(&s.to_string());
            out.push('\n');
        }
        out
    }

    /// Reads plan text; `;` comments and blank lines are skipped.
    pub fn from_text(text: &str) -> Result<Plan, PlanParseError> {
        let mut steps = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split(';').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let step = line
                .parse::<ActionRef>()
                .map_err(|e| PlanParseError { line: i + 1, message: e.to_string() })?;
            steps.push(step);
        }
        Ok(Plan { steps })
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("plan line {line}: {message}")]
pub struct PlanParseError {
    pub line: usize,
    pub message: String,
}

/// Why a plan is invalid. `step` is 1-based; `0` means the final goal check.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("step {step}: {message}")]
pub struct PlanDiagnostic {
    pub step: usize,
    pub message: String,
}

/// Executes `plan` on the grounded task.
pub fn validate(task: &GroundTask, plan: &Plan) -> Result<(), PlanDiagnostic> {
    let mut state = task.init.clone();
    for (i, step) in plan.steps.iter().enumerate() {
        let a = task.action_index(step).map(|j| &task.actions[j]).ok_or_else(|| PlanDiagnostic {
            step: i + 1,
            message: format!("{step} is not an action of the task"),
        })?;
        if !a.applicable(&state) {
            let missing: Vec<String> =
                a.pre.iter().filter(|&&p| !state.contains(p)).map(|&p| task.atoms[p].to_string()).collect();
            return Err(PlanDiagnostic {
                step: i + 1,
                message: format!("precondition of {step} fails: {}", missing.join(" ")),
            });
        }
        state = a.apply(&state);
    }
    if !task.is_goal(&state) {
        let missing: Vec<String> =
            task.goal.iter().filter(|&&g| !state.contains(g)).map(|&g| task.atoms[g].to_string()).collect();
        return Err(PlanDiagnostic { step: 0, message: format!("goal not reached: {}", missing.join(" ")) });
    }
    Ok(())
}

/// Executes `plan` directly on the model semantics (negative preconditions
/// and goals included), independent of compilation and grounding.
pub fn validate_on_model(domain: &Domain, task: &GroundTaskSpec, plan: &Plan) -> Result<(), PlanDiagnostic> {
    let objects = task.object_table(domain);
    let mut state = task.init.clone();
    for (i, step) in plan.steps.iter().enumerate() {
        let a = resolve_action(domain, &objects, step).map_err(|m| PlanDiagnostic { step: i + 1, message: m })?;
        if !a.applicable(&state) {
            return Err(PlanDiagnostic { step: i + 1, message: format!("precondition of {step} fails") });
        }
        state = a.apply(&state);
    }
    if !state.satisfies(&task.goal) {
        return Err(PlanDiagnostic { step: 0, message: "goal not reached".into() });
    }
    Ok(())
}
