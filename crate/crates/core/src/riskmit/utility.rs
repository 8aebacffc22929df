use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::canonical::{short_hash, to_compact_string};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub l2: f64,
    pub max_epochs: usize,
    pub tolerance: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams { learning_rate: 0.1, l2: 1e-4, max_epochs: 10_000, tolerance: 1e-8 }
    }
}

/// Example weights for each one-vs-rest problem.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassWeighting {
    /// Every example weighs 1.
    None,
    /// Positives weigh N/(2P) and negatives N/(2(N-P)).
    #[default]
    InverseFrequency,
}

/// Weight of positive and negative examples in one binary problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub positive: f64,
    pub negative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub dataset_hash: String,
    pub examples: usize,
    pub epochs: Vec<usize>,
    pub final_loss: Vec<f64>,
    /// Actions whose problem had only one class; their bias is pinned.
    pub single_class: Vec<String>,
    pub hyperparams: Hyperparams,
    pub weighting: ClassWeighting,
}

/// One sigmoid utility per mitigating action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionUtilityModel {
    pub actions: Vec<String>,
    pub weights: Vec<Vec<f64>>,
    pub class_weights: Vec<ClassWeights>,
    pub meta: Option<TrainingMeta>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("label `{0}` is not a declared action")]
    UnknownLabel(String),
    #[error("example {index} has {found} features, expected {expected}")]
    DimensionMismatch { index: usize, found: usize, expected: usize },
    #[error("loss became non-finite for action `{0}`")]
    NonFiniteLoss(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("feature vector has {found} entries, model expects {expected}")]
pub struct DimensionMismatch {
    pub found: usize,
    pub expected: usize,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// One weighted binary problem: `(x, y, s)` triples.
pub struct Binary<'a> {
    pub xs: Vec<&'a [f64]>,
    pub ys: Vec<f64>,
    pub ss: Vec<f64>,
    pub l2: f64,
}

impl Binary<'_> {
    /// Weighted mean cross-entropy plus `l2/2 * |w|^2` (bias excluded; the
    /// bias is the last coordinate).
    pub fn loss(&self, w: &[f64]) -> f64 {
        let total: f64 = self.ss.iter().sum();
        let mut l = 0.0;
        for ((x, y), s) in self.xs.iter().zip(&self.ys).zip(&self.ss) {
            let z = dot(w, x);
            // -y log σ(z) - (1-y) log(1-σ(z)) = softplus(z) - y z
            l += s * (softplus(z) - y * z);
        }
        let reg: f64 = w[..w.len() - 1].iter().map(|v| v * v).sum();
        l / total + 0.5 * self.l2 * reg
    }

    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let total: f64 = self.ss.iter().sum();
        let mut g = vec![0.0; w.len()];
        for ((x, y), s) in self.xs.iter().zip(&self.ys).zip(&self.ss) {
            let r = s * (sigmoid(dot(w, x)) - y) / total;
            for (gj, xj) in g.iter_mut().zip(x.iter()) {
                *gj += r * xj;
            }
        }
        let last = w.len() - 1;
        for j in 0..last {
            g[j] += self.l2 * w[j];
        }
        g
    }
}

pub fn dataset_hash(data: &[Example]) -> String {
    short_hash(to_compact_string(&data).as_bytes())
}

/// Fits one weighted logistic regression per action by full-batch gradient
/// descent from zero weights. An action with only positive or only negative
/// examples keeps zero feature weights and a bias of `ln((P+0.5)/(N+0.5))`.
pub fn train(
    data: &[Example],
    actions: &[String],
    weighting: ClassWeighting,
    hp: Hyperparams,
) -> Result<ActionUtilityModel, TrainError> {
    let dim = data.first().ok_or(TrainError::EmptyDataset)?.features.len();
    for (i, e) in data.iter().enumerate() {
        if e.features.len() != dim {
            return Err(TrainError::DimensionMismatch { index: i, found: e.features.len(), expected: dim });
        }
        if !actions.contains(&e.label) {
            return Err(TrainError::UnknownLabel(e.label.clone()));
        }
    }
    let mut model = ActionUtilityModel {
        actions: actions.to_vec(),
        weights: Vec::new(),
        class_weights: Vec::new(),
        meta: None,
    };
    let mut meta = TrainingMeta {
        dataset_hash: dataset_hash(data),
        examples: data.len(),
        epochs: Vec::new(),
        final_loss: Vec::new(),
        single_class: Vec::new(),
        hyperparams: hp,
        weighting,
    };
    let n = data.len() as f64;
    for action in actions {
        let ys: Vec<f64> = data.iter().map(|e| if &e.label == action { 1.0 } else { 0.0 }).collect();
        let p: f64 = ys.iter().sum();
        let cw = match weighting {
            ClassWeighting::None => ClassWeights { positive: 1.0, negative: 1.0 },
            ClassWeighting::InverseFrequency if p > 0.0 && p < n => {
                ClassWeights { positive: n / (2.0 * p), negative: n / (2.0 * (n - p)) }
            }
            ClassWeighting::InverseFrequency => ClassWeights { positive: 1.0, negative: 1.0 },
        };
        let mut w = vec![0.0; dim];
        let problem = Binary {
            xs: data.iter().map(|e| e.features.as_slice()).collect(),
            ss: ys.iter().map(|&y| if y == 1.0 { cw.positive } else { cw.negative }).collect(),
            ys,
            l2: hp.l2,
        };
        let mut epochs = 0;
        if p == 0.0 || p == n {
            meta.single_class.push(action.clone());
            w[dim - 1] = ((p + 0.5) / (n - p + 0.5)).ln();
        } else {
            let mut prev = problem.loss(&w);
            while epochs < hp.max_epochs {
                let g = problem.gradient(&w);
                for (wj, gj) in w.iter_mut().zip(&g) {
                    *wj -= hp.learning_rate * gj;
                }
                epochs += 1;
                let l = problem.loss(&w);
                if !l.is_finite() {
                    return Err(TrainError::NonFiniteLoss(action.clone()));
                }
                let done = (prev - l).abs() < hp.tolerance;
                prev = l;
                if done {
                    break;
                }
            }
        }
        meta.epochs.push(epochs);
        meta.final_loss.push(problem.loss(&w));
        model.weights.push(w);
        model.class_weights.push(cw);
    }
    model.meta = Some(meta);
    Ok(model)
}

impl ActionUtilityModel {
    /// All-zero model: every utility is exactly 0.5.
    pub fn zero(actions: &[String], dim: usize) -> Self {
        ActionUtilityModel {
            actions: actions.to_vec(),
            weights: vec![vec![0.0; dim]; actions.len()],
            class_weights: vec![ClassWeights { positive: 1.0, negative: 1.0 }; actions.len()],
            meta: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn predict_utilities(&self, x: &[f64]) -> Result<Vec<f64>, DimensionMismatch> {
        if x.len() != self.dim() {
            return Err(DimensionMismatch { found: x.len(), expected: self.dim() });
        }
        Ok(self.weights.iter().map(|w| sigmoid(dot(w, x))).collect())
    }

    /// Index of the largest utility; the earliest action wins ties.
    pub fn select_index(utilities: &[f64]) -> usize {
        let mut best = 0;
        for (i, u) in utilities.iter().enumerate() {
            if *u > utilities[best] {
                best = i;
            }
        }
        best
    }

    pub fn select_action(&self, x: &[f64]) -> Result<&str, DimensionMismatch> {
        let u = self.predict_utilities(x)?;
        Ok(&self.actions[Self::select_index(&u)])
    }

    /// Fraction of examples whose label is the selected action.
    pub fn accuracy(&self, data: &[Example]) -> f64 {
        let hits = data
            .iter()
            .filter(|e| self.select_action(&e.features).is_ok_and(|a| a == e.label))
            .count();
        hits as f64 / data.len().max(1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn actions() -> Vec<String> {
        ["proceed", "abort"].map(String::from).to_vec()
    }

    fn separable() -> Vec<Example> {
        // label abort iff x0 + x1 > 1
        let pts = [(0.1, 0.2), (0.3, 0.4), (0.2, 0.6), (0.9, 0.8), (0.7, 0.6), (1.0, 0.4), (0.0, 0.5), (0.6, 0.9)];
        pts.iter()
            .map(|&(a, b)| Example {
                features: vec![a, b, 1.0],
                label: if a + b > 1.0 { "abort" } else { "proceed" }.into(),
            })
            .collect()
    }

    #[test]
    fn zero_epochs_give_half_utilities() {
        let hp = Hyperparams { max_epochs: 0, ..Hyperparams::default() };
        let m = train(&separable(), &actions(), ClassWeighting::InverseFrequency, hp).unwrap();
        assert!(m.weights.iter().flatten().all(|w| *w == 0.0));
        assert_eq!(m.predict_utilities(&[0.3, 0.3, 1.0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(m.select_action(&[0.3, 0.3, 1.0]).unwrap(), "proceed");
    }

    #[test]
    fn separable_set_is_fit() {
        let hp = Hyperparams { learning_rate: 1.0, l2: 0.0, max_epochs: 20_000, tolerance: 1e-12 };
        let data = separable();
        let m = train(&data, &actions(), ClassWeighting::InverseFrequency, hp).unwrap();
        assert_eq!(m.accuracy(&data), 1.0);
    }

    #[test]
    fn uniform_weights_match_unweighted_on_balanced_set() {
        let data = separable();
        let hp = Hyperparams { max_epochs: 50, ..Hyperparams::default() };
        let a = train(&data, &actions(), ClassWeighting::None, hp).unwrap();
        let b = train(&data, &actions(), ClassWeighting::InverseFrequency, hp).unwrap();
        assert_eq!(a.weights, b.weights);
    }

    #[test]
    fn single_class_pins_bias() {
        let data = vec![Example { features: vec![1.0, 1.0], label: "proceed".into() }];
        let m = train(&data, &actions(), ClassWeighting::InverseFrequency, Hyperparams::default()).unwrap();
        let meta = m.meta.as_ref().unwrap();
        assert_eq!(meta.single_class, actions());
        assert_eq!(m.weights[0], vec![0.0, (1.5f64 / 0.5).ln()]);
        assert_eq!(m.weights[1], vec![0.0, (0.5f64 / 1.5).ln()]);
    }

    #[test]
    fn abort_bias_selects_abort() {
        let mut m = ActionUtilityModel::zero(&actions(), 3);
        m.weights[1][2] = 1.0;
        assert_eq!(m.select_action(&[5.0, -3.0, 1.0]).unwrap(), "abort");
        assert!(m.predict_utilities(&[1.0]).is_err());
    }

    #[test]
    fn loss_does_not_increase() {
        let data = separable();
        let xs: Vec<&[f64]> = data.iter().map(|e| e.features.as_slice()).collect();
        let p = Binary {
            xs,
            ys: data.iter().map(|e| f64::from(u8::from(e.label == "abort"))).collect(),
            ss: vec![1.0; data.len()],
            l2: 1e-4,
        };
        let mut w = vec![0.0; 3];
        let mut prev = p.loss(&w);
        for _ in 0..500 {
            let g = p.gradient(&w);
            for (a, b) in w.iter_mut().zip(&g) {
                *a -= 0.1 * b;
            }
            let l = p.loss(&w);
            assert!(l <= prev + 1e-15);
            prev = l;
        }
    }
}
