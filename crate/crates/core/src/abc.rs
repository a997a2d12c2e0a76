//! Attribution-based confidence, restricted to one backward pass.
//!
//! The attribution of feature `j` is gradient x input of the predicted
//! class logit. Each perturbed sample mutates features drawn with probability
//! proportional to `|attribution_j|`, and the score is the fraction of
//! samples that keep the original label. No importance reweighting is
//! applied, so the score is a budget-matched white-box counterpart of the
//! neighborhood estimator rather than a full reproduction of the original
//! estimator.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{check_dims, FeatureVector, Label, Objective, WhiteBoxClassifier};
use crate::data::Layout;
use crate::error::{Error, Result};
use crate::nhc::{ConfidenceScore, EstimatorKind};
use crate::rng::{mix, stream, StreamTag};

/// Signed per-feature attribution of the predicted class.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionMap {
    pub values: Vec<f64>,
    pub source_class: Label,
}

impl AttributionMap {
    /// Feature-selection probabilities `|a_j| / sum |a|`, uniform when the
    /// attribution vanishes.
    pub fn selection_weights(&self) -> Vec<f64> {
        let total: f64 = self.values.iter().map(|a| a.abs()).sum();
        if total > 0.0 && total.is_finite() {
            self.values.iter().map(|a| a.abs() / total).collect()
        } else {
            vec![1.0 / self.values.len() as f64; self.values.len()]
        }
    }
}

/// How a selected feature is mutated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    /// Replace with a uniform draw from `[lo, hi]` (bounded features).
    Resample { lo: f64, hi: f64 },
    /// Move by `±delta` with a fair sign (unbounded features).
    Step { delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbcConfig {
    pub num_samples: usize,
    pub seed: u64,
    pub mutation: Mutation,
    /// Features mutated per sample, drawn with replacement.
    pub features_per_sample: usize,
}

impl AbcConfig {
    /// Resampling over [0, 1] for image data, `±strength` steps otherwise.
    pub fn for_layout(layout: Layout, num_samples: usize, seed: u64, strength: f64) -> Self {
        let mutation = match layout.clip_bounds() {
            Some((lo, hi)) => Mutation::Resample { lo, hi },
            None => Mutation::Step { delta: strength },
        };
        Self {
            num_samples,
            seed,
            mutation,
            features_per_sample: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_samples == 0 {
            return Err(Error::param("num_samples", "must be at least 1"));
        }
        if self.features_per_sample == 0 {
            return Err(Error::param("features_per_sample", "must be at least 1"));
        }
        match self.mutation {
            Mutation::Resample { lo, hi } if !(lo < hi && lo.is_finite() && hi.is_finite()) => {
                Err(Error::param("mutation", "need finite lo < hi"))
            }
            Mutation::Step { delta } if !(delta > 0.0 && delta.is_finite()) => {
                Err(Error::param("mutation", "delta must be positive and finite"))
            }
            _ => Ok(()),
        }
    }

    pub fn digest(&self) -> u64 {
        let (tag, a, b) = match self.mutation {
            Mutation::Resample { lo, hi } => (0, lo.to_bits(), hi.to_bits()),
            Mutation::Step { delta } => (1, delta.to_bits(), 0),
        };
        mix(&[
            0xabc,
            self.num_samples as u64,
            self.seed,
            self.features_per_sample as u64,
            tag,
            a,
            b,
        ])
    }
}

/// Gradient x input of the predicted logit.
pub fn attribution_single_pass<M: WhiteBoxClassifier + ?Sized>(model: &M, x: &FeatureVector) -> Result<AttributionMap> {
    let source_class = model.classify_one(x)?;
    let grad = model.input_gradient(x, Objective::Logit(source_class))?;
    Ok(AttributionMap {
        values: grad.iter().zip(x.iter()).map(|(g, v)| g * v).collect(),
        source_class,
    })
}

fn perturbations(x: &FeatureVector, attribution: &AttributionMap, cfg: &AbcConfig, index: u64) -> Vec<FeatureVector> {
    let mut rng = stream(cfg.seed, StreamTag::AbcMutation, &[index]);
    let selector = WeightedIndex::new(attribution.selection_weights()).expect("weights are positive and finite");
    let mut batch = Vec::with_capacity(cfg.num_samples + 1);
    batch.push(x.clone());
    for _ in 0..cfg.num_samples {
        let mut v = x.values().to_vec();
        for _ in 0..cfg.features_per_sample {
            let j = selector.sample(&mut rng);
            v[j] = match cfg.mutation {
                Mutation::Resample { lo, hi } => rng.random_range(lo..=hi),
                Mutation::Step { delta } => {
                    if rng.random::<bool>() {
                        v[j] + delta
                    } else {
                        v[j] - delta
                    }
                }
            };
        }
        batch.push(FeatureVector::from_finite(v));
    }
    batch
}

/// ABC score of `x` with the mutation stream of point index 0.
pub fn abc_score<M: WhiteBoxClassifier + ?Sized>(
    model: &M,
    x: &FeatureVector,
    cfg: &AbcConfig,
) -> Result<ConfidenceScore> {
    abc_score_at(model, x, cfg, 0)
}

pub fn abc_score_at<M: WhiteBoxClassifier + ?Sized>(
    model: &M,
    x: &FeatureVector,
    cfg: &AbcConfig,
    index: u64,
) -> Result<ConfidenceScore> {
    Ok(score_points(model, std::slice::from_ref(x), cfg, index)?[0])
}

/// `result[i]` equals `abc_score_at(model, &points[i], cfg, i)`.
pub fn abc_batch<M: WhiteBoxClassifier + ?Sized>(
    model: &M,
    points: &[FeatureVector],
    cfg: &AbcConfig,
) -> Result<Vec<ConfidenceScore>> {
    score_points(model, points, cfg, 0)
}

fn score_points<M: WhiteBoxClassifier + ?Sized>(
    model: &M,
    points: &[FeatureVector],
    cfg: &AbcConfig,
    first_index: u64,
) -> Result<Vec<ConfidenceScore>> {
    cfg.validate()?;
    check_dims(points, model.input_dim())?;
    let batches = points
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let attribution = attribution_single_pass(model, x)?;
            Ok(perturbations(x, &attribution, cfg, first_index + i as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    let fused: Vec<FeatureVector> = batches.into_iter().flatten().collect();
    let labels = model.classify(&fused)?;
    let digest = cfg.digest();
    Ok(labels
        .chunks(cfg.num_samples + 1)
        .map(|chunk| ConfidenceScore {
            count: chunk[1..].iter().filter(|&&l| l == chunk[0]).count(),
            denominator: cfg.num_samples,
            estimator: EstimatorKind::Abc,
            spec_digest: digest,
        })
        .collect())
}
