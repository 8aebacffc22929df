use serde::{Deserialize, Serialize};

use crate::model::{Domain, Severity};

/// Fixed feature layout derived from a model's failure cases.
///
/// Order: one indicator per case, one severity channel per case (rank / 3
/// while the case is active, else 0), active-case count, plan progress, bias.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpace {
    pub cases: Vec<String>,
    pub severities: Vec<Severity>,
}

impl FeatureSpace {
    pub fn from_domain(domain: &Domain) -> Self {
        FeatureSpace {
            cases: domain.failure_cases.iter().map(|c| c.name.clone()).collect(),
            severities: domain.failure_cases.iter().map(|c| c.severity).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.cases.len() + 3
    }

    pub fn names(&self) -> Vec<String> {
        let mut out: Vec<String> = self.cases.iter().map(|c| format!("active:{c}")).collect();
        out.extend(self.cases.iter().map(|c| format!("severity:{c}")));
        out.extend(["active-count", "progress", "bias"].map(String::from));
        out
    }

    /// Feature vector for the named active cases; unknown names are ignored.
    pub fn featurize<S: AsRef<str>>(&self, active: &[S], progress: f64) -> Vec<f64> {
        let n = self.cases.len();
        let mut x = vec![0.0; self.dim()];
        let mut count = 0.0;
        for (i, c) in self.cases.iter().enumerate() {
            if active.iter().any(|a| a.as_ref() == c) {
                x[i] = 1.0;
                x[n + i] = f64::from(self.severities[i].rank()) / 3.0;
                count += 1.0;
            }
        }
        x[2 * n] = count;
        x[2 * n + 1] = progress.clamp(0.0, 1.0);
        x[2 * n + 2] = 1.0;
        x
    }
}
