use thiserror::Error;

use super::features::FeatureSpace;
use super::utility::Example;
use super::{mitigation_action, BUILTIN_MITIGATIONS};
use crate::model::Domain;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("no failure case in `{0}` links a mitigation")]
pub struct EmptyKnowledge(pub String);

/// Progress values at which hazard examples are emitted.
const HAZARD_PROGRESS: [f64; 3] = [0.0, 0.5, 1.0];

/// Training options: the progress grid of the no-hazard `proceed` examples
/// and whether co-occurring pairs of cases are included.
#[derive(Clone, Debug, PartialEq)]
pub struct DataOptions {
    pub no_hazard_progress: Vec<f64>,
    pub pairs: bool,
}

impl Default for DataOptions {
    fn default() -> Self {
        DataOptions { no_hazard_progress: vec![0.0, 0.25, 0.5, 0.75, 1.0], pairs: true }
    }
}

/// The mitigation vocabulary a trained model chooses from.
pub fn action_vocabulary() -> Vec<String> {
    BUILTIN_MITIGATIONS.iter().map(|s| s.to_string()).collect()
}

/// Labeled examples learned from a model's failure cases.
///
/// Every case with mitigations contributes one example per linked mitigation
/// at each hazard progress value. With `pairs`, each pair of cases that both
/// link mitigations contributes examples labeled by the more severe case
/// (the earlier one on ties). No-hazard examples are labeled `proceed`.
pub fn derive_training_data(domain: &Domain, opts: &DataOptions) -> Result<Vec<Example>, EmptyKnowledge> {
    let space = FeatureSpace::from_domain(domain);
    let linked: Vec<_> = domain.failure_cases.iter().filter(|c| !c.mitigations.is_empty()).collect();
    if linked.is_empty() {
        return Err(EmptyKnowledge(domain.name.clone()));
    }
    let mut out = Vec::new();
    let labels = |case: &crate::model::FailureCase| {
        let mut ls: Vec<String> = Vec::new();
        for m in &case.mitigations {
            let a = mitigation_action(m).to_string();
            if !ls.contains(&a) {
                ls.push(a);
            }
        }
        ls
    };
    for case in &linked {
        for &p in &HAZARD_PROGRESS {
            for label in labels(case) {
                out.push(Example { features: space.featurize(&[case.name.as_str()], p), label });
            }
        }
    }
    if opts.pairs {
        for (i, a) in linked.iter().enumerate() {
            for b in &linked[i + 1..] {
                let top = if b.severity > a.severity { b } else { a };
                for &p in &HAZARD_PROGRESS {
                    for label in labels(top) {
                        out.push(Example { features: space.featurize(&[a.name.as_str(), b.name.as_str()], p), label });
                    }
                }
            }
        }
    }
    for &p in &opts.no_hazard_progress {
        out.push(Example { features: space.featurize::<&str>(&[], p), label: "proceed".into() });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FailureCase, Severity};

    #[test]
    fn no_cases_is_empty_knowledge() {
        assert!(derive_training_data(&Domain::new("d"), &DataOptions::default()).is_err());
    }

    #[test]
    fn abort_case_labels() {
        let mut d = Domain::new("d");
        d.failure_cases.push(FailureCase::new("storm", Severity::High, &[], &["abort"]));
        let data = derive_training_data(&d, &DataOptions::default()).unwrap();
        for e in &data {
            assert_eq!(e.label, if e.features[0] == 1.0 { "abort" } else { "proceed" });
        }
        assert_eq!(data.len(), 3 + 5);
    }

    #[test]
    fn schema_mitigations_become_replan() {
        let mut d = Domain::new("d");
        d.failure_cases.push(FailureCase::new("dust", Severity::High, &[], &["brush", "replan"]));
        let data = derive_training_data(&d, &DataOptions::default()).unwrap();
        assert_eq!(data.iter().filter(|e| e.label == "replan").count(), 3);
    }
}
