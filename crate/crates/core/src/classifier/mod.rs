//! Classifier contracts and the small MLP used as the system under test.
//!
//! [`BlackBoxClassifier`] is all the neighborhood estimator needs: a batch of
//! inputs in, one top-1 label per input out. [`WhiteBoxClassifier`] adds
//! logits and input gradients, which the attribution baseline and the PGD
//! adversary require.

mod checkpoint;
mod mlp;
mod train;

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use mlp::{grad_check, Activation, Dense, MlpModel};
pub use train::{train_sgd, TrainConfig, TrainReport};

/// A finite point in feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    /// Wraps `values`, rejecting NaN and infinities.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("feature vector"));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(values))
    }

    /// Wraps values produced by arithmetic on finite inputs. Non-finite
    /// entries are a logic error here and only checked in debug builds.
    pub(crate) fn from_finite(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Largest absolute coordinate difference.
    pub fn linf_distance(&self, other: &FeatureVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn l2_distance(&self, other: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl<'a> IntoIterator for &'a FeatureVector {
    type Item = &'a f64;
    type IntoIter = std::slice::Iter<'a, f64>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(v: FeatureVector) -> Self {
        v.0
    }
}

/// A class index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub usize);

impl Label {
    pub fn index(self) -> usize {
        self.0
    }

    pub fn checked(self, num_classes: usize) -> Result<Self> {
        if self.0 < num_classes {
            Ok(self)
        } else {
            Err(Error::InvalidClass {
                class: self.0,
                num_classes,
            })
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> Label {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    Label(best)
}

/// A classifier that exposes only its top-1 decision.
///
/// Implementations must be deterministic and row-independent: the label of a
/// row may not depend on the other rows of the batch.
pub trait BlackBoxClassifier: Sync {
    fn input_dim(&self) -> usize;

    fn num_classes(&self) -> usize;

    fn classify(&self, batch: &[FeatureVector]) -> Result<Vec<Label>>;

    fn classify_one(&self, x: &FeatureVector) -> Result<Label> {
        Ok(self.classify(std::slice::from_ref(x))?[0])
    }
}

/// Scalar objective whose input gradient is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Softmax cross-entropy against the given label.
    Loss(Label),
    /// The raw logit of the given class.
    Logit(Label),
}

impl Objective {
    pub fn class(self) -> Label {
        match self {
            Objective::Loss(l) | Objective::Logit(l) => l,
        }
    }
}

/// A classifier that also exposes logits and input gradients.
///
/// `classify` must agree with the argmax of `logits` under the lowest-index
/// tie-break.
pub trait WhiteBoxClassifier: BlackBoxClassifier {
    fn logits(&self, batch: &[FeatureVector]) -> Result<Vec<Vec<f64>>>;

    fn input_gradient(&self, x: &FeatureVector, objective: Objective) -> Result<Vec<f64>>;
}

pub(crate) fn check_dims(batch: &[FeatureVector], expected: usize) -> Result<()> {
    match batch.iter().find(|x| x.dim() != expected) {
        Some(x) => Err(Error::DimensionMismatch {
            expected,
            found: x.dim(),
        }),
        None => Ok(()),
    }
}

/// Stable softmax cross-entropy of `logits` against `label`.
pub fn cross_entropy(logits: &[f64], label: Label) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    lse - logits[label.0]
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_vector_rejects_non_finite() {
        assert!(matches!(
            FeatureVector::new(vec![0.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(FeatureVector::new(vec![f64::INFINITY]).is_err());
        assert!(FeatureVector::new(vec![]).is_err());
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.3, 0.7]), Label(1));
        assert_eq!(argmax(&[0.5, 0.5]), Label(0));
        assert_eq!(argmax(&[-1.0, 2.0, 2.0]), Label(1));
    }

    #[test]
    fn cross_entropy_is_stable() {
        let big = cross_entropy(&[1000.0, 0.0], Label(0));
        assert!(big.abs() < 1e-12);
        let even = cross_entropy(&[0.0, 0.0], Label(1));
        assert!((even - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn label_range_check() {
        assert!(Label(2).checked(3).is_ok());
        assert!(matches!(
            Label(3).checked(3),
            Err(Error::InvalidClass {
                class: 3,
                num_classes: 3
            })
        ));
    }
}
