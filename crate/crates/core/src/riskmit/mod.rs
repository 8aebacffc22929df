//! Execution-time risk mitigation: hazard features, one logistic utility per
//! mitigating action, and a plan-execution simulator with hazard injection.
//!
//! ```
//! use hrrt_core::fixtures;
//! use hrrt_core::riskmit::{train_for_domain, FeatureSpace};
//! use hrrt_core::model::{Domain, FailureCase, Severity};
//!
//! let mut d = Domain::new("yard");
//! d.failure_cases.push(FailureCase::new("person-near", Severity::Critical, &[], &["abort"]));
//! let model = train_for_domain(&d).unwrap();
//! let x = FeatureSpace::from_domain(&d).featurize(&["person-near"], 0.5);
//! assert_eq!(model.select_action(&x).unwrap(), "abort");
//! # let _ = fixtures::lunar_seed();
//! ```

mod data;
mod features;
mod simulate;
mod utility;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use data::{action_vocabulary, derive_training_data, DataOptions, EmptyKnowledge};
pub use features::FeatureSpace;
pub use simulate::{
    simulate_execution, HazardEvent, HazardSource, SafetyReport, SafetySummary, SimConfig, SimError, StepOutcome,
    StepRecord,
};
pub use utility::{
    dataset_hash, sigmoid, train, ActionUtilityModel, Binary, ClassWeighting, ClassWeights, DimensionMismatch,
    Example, Hyperparams, TrainError, TrainingMeta,
};

use crate::model::canonical::{to_canonical_string, SCHEMA_VERSION};
use crate::model::Domain;

/// Mitigations every model understands without declaring an action for them.
pub const BUILTIN_MITIGATIONS: [&str; 5] = ["proceed", "slow-mode", "abort", "request-help", "replan"];

/// The execution-time response to a linked mitigation. Built-in names map to
/// themselves; a mitigation naming an action schema is carried out by
/// replanning, which lets the planner schedule that action.
pub fn mitigation_action(name: &str) -> &str {
    BUILTIN_MITIGATIONS.iter().find(|b| **b == name).copied().unwrap_or("replan")
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error(transparent)]
    EmptyKnowledge(#[from] EmptyKnowledge),
    #[error(transparent)]
    Train(#[from] TrainError),
}

/// Derives the default dataset from the model's failure cases and trains with
/// default hyperparameters and inverse-frequency class weights.
pub fn train_for_domain(domain: &Domain) -> Result<ActionUtilityModel, PolicyError> {
    let data = derive_training_data(domain, &DataOptions::default())?;
    Ok(train(&data, &action_vocabulary(), ClassWeighting::InverseFrequency, Hyperparams::default())?)
}

/// Serialized form of a utility model: weights as decimal strings, which
/// Rust's shortest round-trip float formatting reloads bit for bit.
#[derive(Serialize, Deserialize)]
struct WeightsFile {
    schema_version: u32,
    features: Vec<String>,
    actions: Vec<String>,
    weights: Vec<Vec<String>>,
    class_weights: Vec<ClassWeights>,
    meta: Option<TrainingMeta>,
}

#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("malformed weights file: {0}")]
    Malformed(String),
    #[error("weight `{0}` is not a decimal number")]
    BadNumber(String),
}

pub fn weights_path(root: &Path, name: &str) -> PathBuf {
    root.join("riskmit").join(format!("{name}.weights.json"))
}

impl ActionUtilityModel {
    pub fn to_weights_json(&self, space: &FeatureSpace) -> String {
        to_canonical_string(&WeightsFile {
            schema_version: SCHEMA_VERSION,
            features: space.names(),
            actions: self.actions.clone(),
            weights: self.weights.iter().map(|w| w.iter().map(|v| format!("{v:?}")).collect()).collect(),
            class_weights: self.class_weights.clone(),
            meta: self.meta.clone(),
        })
    }

    pub fn from_weights_json(text: &str) -> Result<Self, WeightsError> {
        let f: WeightsFile = serde_json::from_str(text).map_err(|e| WeightsError::Malformed(e.to_string()))?;
        if f.schema_version != SCHEMA_VERSION {
            return Err(WeightsError::Malformed(format!("schema_version {}", f.schema_version)));
        }
        if f.weights.len() != f.actions.len() || f.class_weights.len() != f.actions.len() {
            return Err(WeightsError::Malformed("one weight vector per action expected".into()));
        }
        let weights = f
            .weights
            .iter()
            .map(|w| {
                w.iter()
                    .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| WeightsError::BadNumber(s.clone())))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        if weights.iter().any(|w| w.len() != f.features.len()) {
            return Err(WeightsError::Malformed("weight vector length differs from feature count".into()));
        }
        Ok(ActionUtilityModel { actions: f.actions, weights, class_weights: f.class_weights, meta: f.meta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn weights_reload_bit_exactly() {
        let d = fixtures::household_seed();
        let mut m = ActionUtilityModel::zero(&action_vocabulary(), FeatureSpace::from_domain(&d).dim());
        m.weights[2][0] = 0.1 + 0.2;
        m.weights[3][1] = -1.0e-300;
        m.weights[4][2] = std::f64::consts::PI;
        let text = m.to_weights_json(&FeatureSpace::from_domain(&d));
        let back = ActionUtilityModel::from_weights_json(&text).unwrap();
        for (a, b) in m.weights.iter().flatten().zip(back.weights.iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.to_weights_json(&FeatureSpace::from_domain(&d)), text);
    }

    #[test]
    fn mitigation_mapping() {
        assert_eq!(mitigation_action("abort"), "abort");
        assert_eq!(mitigation_action("brush-off-dust"), "replan");
    }
}
