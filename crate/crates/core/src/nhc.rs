//! Neighborhood confidence.
//!
//! For an input `x`, draw `N` unit-amplitude noise vectors `n_i`, form
//! `x'_i = x + λ n_i`, classify `[x, x'_0, .., x'_{N-1}]` in one batch and
//! report the fraction of perturbed points that keep the label of `x`. Only
//! top-1 labels are consumed, so any [`BlackBoxClassifier`] works.
//!
//! Noise for point `index` and strength slot `k` comes from a stream keyed by
//! `(seed, index, k)`, which makes every score independent of batch
//! composition and thread schedule.
//!
//! `λ` is interpreted relative to unit-scaled features; the estimator itself
//! is agnostic to units.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{check_dims, BlackBoxClassifier, FeatureVector, Label};
use crate::error::{Error, Result};
use crate::rng::{mix, stream, StreamTag};

pub const DEFAULT_NUM_SAMPLES: usize = 7;
pub const DEFAULT_STRENGTH: f64 = 0.4;
/// Largest input dimension `nhc_exact_rademacher` will enumerate.
pub const MAX_EXACT_DIM: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseDistribution {
    /// Each coordinate uniform on {-1, +1}.
    #[default]
    Rademacher,
    /// Each coordinate standard normal.
    Gaussian,
    /// Each coordinate uniform on (-1, 1).
    Uniform,
}

impl NoiseDistribution {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseDistribution::Rademacher => "rademacher",
            NoiseDistribution::Gaussian => "gaussian",
            NoiseDistribution::Uniform => "uniform",
        }
    }

    fn draw<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            NoiseDistribution::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            NoiseDistribution::Gaussian => rng.sample(StandardNormal),
            NoiseDistribution::Uniform => rng.random_range(-1.0..1.0),
        }
    }
}

impl std::str::FromStr for NoiseDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rademacher" => Ok(Self::Rademacher),
            "gaussian" => Ok(Self::Gaussian),
            "uniform" => Ok(Self::Uniform),
            other => Err(Error::param("distribution", format!("unknown distribution `{other}`"))),
        }
    }
}

/// Sampling configuration for the neighborhood estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub distribution: NoiseDistribution,
    pub strength: f64,
    pub num_samples: usize,
    pub seed: u64,
    /// Element-wise `(lo, hi)` clamp applied after perturbation.
    pub clip_bounds: Option<(f64, f64)>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            distribution: NoiseDistribution::Rademacher,
            strength: DEFAULT_STRENGTH,
            num_samples: DEFAULT_NUM_SAMPLES,
            seed: 0,
            clip_bounds: None,
        }
    }
}

impl NoiseSpec {
    pub fn new(strength: f64, num_samples: usize, seed: u64) -> Result<Self> {
        let spec = Self {
            strength,
            num_samples,
            seed,
            ..Self::default()
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_distribution(self, distribution: NoiseDistribution) -> Self {
        Self { distribution, ..self }
    }

    pub fn with_clip(self, clip_bounds: Option<(f64, f64)>) -> Self {
        Self { clip_bounds, ..self }
    }

    pub fn with_strength(self, strength: f64) -> Self {
        Self { strength, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strength > 0.0 && self.strength.is_finite()) {
            return Err(Error::param("strength", "must be positive and finite"));
        }
        if self.num_samples == 0 {
            return Err(Error::param("num_samples", "must be at least 1"));
        }
        if let Some((lo, hi)) = self.clip_bounds {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return Err(Error::param("clip_bounds", "need finite lo < hi"));
            }
        }
        Ok(())
    }

    /// Opaque fingerprint of the configuration.
    pub fn digest(&self) -> u64 {
        let (lo, hi) = self.clip_bounds.unwrap_or((f64::NAN, f64::NAN));
        mix(&[
            self.distribution as u64,
            self.strength.to_bits(),
            self.num_samples as u64,
            self.seed,
            self.clip_bounds.is_some() as u64,
            lo.to_bits(),
            hi.to_bits(),
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Nhc,
    NhcRef,
    Abc,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Nhc => "nhc",
            EstimatorKind::NhcRef => "nhc_ref",
            EstimatorKind::Abc => "abc",
        }
    }
}

/// A conformance fraction `count / denominator`, kept as an exact rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfidenceScore {
    pub count: usize,
    pub denominator: usize,
    pub estimator: EstimatorKind,
    pub spec_digest: u64,
}

impl ConfidenceScore {
    pub fn value(&self) -> f64 {
        self.count as f64 / self.denominator as f64
    }

    /// `value() >= threshold`, decided on the rational so that thresholds
    /// sitting exactly on a multiple of `1/N` are never lost to rounding.
    pub fn meets(&self, threshold: f64) -> bool {
        let n = self.denominator as f64;
        self.count as f64 >= threshold * n - 1e-9 * n.max(1.0)
    }
}

/// `N` unscaled noise vectors for point `index`, strength slot 0.
pub fn sample_noise(spec: &NoiseSpec, dim: usize, index: u64) -> Vec<Vec<f64>> {
    sample_noise_slot(spec, dim, index, 0)
}

pub(crate) fn sample_noise_slot(spec: &NoiseSpec, dim: usize, index: u64, slot: u64) -> Vec<Vec<f64>> {
    let mut rng = stream(spec.seed, StreamTag::NhcNoise, &[index, slot]);
    (0..spec.num_samples)
        .map(|_| (0..dim).map(|_| spec.distribution.draw(&mut rng)).collect())
        .collect()
}

/// `[x, x'_0, .., x'_{N-1}]` for one point.
fn neighborhood(x: &FeatureVector, spec: &NoiseSpec, index: u64, slot: u64) -> Vec<FeatureVector> {
    let noise = sample_noise_slot(spec, x.dim(), index, slot);
    let mut batch = Vec::with_capacity(spec.num_samples + 1);
    batch.push(x.clone());
    batch.extend(noise.into_iter().map(|n| {
        let values = x
            .iter()
            .zip(n)
            .map(|(xv, nv)| {
                let v = xv + spec.strength * nv;
                match spec.clip_bounds {
                    Some((lo, hi)) => v.clamp(lo, hi),
                    None => v,
                }
            })
            .collect();
        FeatureVector::from_finite(values)
    }));
    batch
}

fn score_from_labels(labels: &[Label], reference: Option<Label>, spec: &NoiseSpec) -> ConfidenceScore {
    let (target, estimator) = match reference {
        Some(r) => (r, EstimatorKind::NhcRef),
        None => (labels[0], EstimatorKind::Nhc),
    };
    ConfidenceScore {
        count: labels[1..].iter().filter(|&&l| l == target).count(),
        denominator: spec.num_samples,
        estimator,
        spec_digest: spec.digest(),
    }
}

fn score_points<C: BlackBoxClassifier + ?Sized>(
    classifier: &C,
    points: &[FeatureVector],
    spec: &NoiseSpec,
    first_index: u64,
    slot: u64,
    reference: Option<Label>,
) -> Result<Vec<ConfidenceScore>> {
    spec.validate()?;
    check_dims(points, classifier.input_dim())?;
    if let Some(r) = reference {
        r.checked(classifier.num_classes())?;
    }
    let fused: Vec<FeatureVector> = points
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, x)| neighborhood(x, spec, first_index + i as u64, slot))
        .collect();
    let labels = classifier.classify(&fused)?;
    if labels.len() != fused.len() {
        return Err(Error::LengthMismatch {
            what: "classifier output vs batch",
            left: labels.len(),
            right: fused.len(),
        });
    }
    Ok(labels
        .chunks(spec.num_samples + 1)
        .map(|chunk| score_from_labels(chunk, reference, spec))
        .collect())
}

/// Neighborhood confidence of `x`, noise stream of point index 0.
pub fn nhc<C: BlackBoxClassifier + ?Sized>(
    classifier: &C,
    x: &FeatureVector,
    spec: &NoiseSpec,
) -> Result<ConfidenceScore> {
    nhc_at(classifier, x, spec, 0)
}

/// Neighborhood confidence of `x` using the noise stream of point `index`.
pub fn nhc_at<C: BlackBoxClassifier + ?Sized>(
    classifier: &C,
    x: &FeatureVector,
    spec: &NoiseSpec,
    index: u64,
) -> Result<ConfidenceScore> {
    Ok(score_points(classifier, std::slice::from_ref(x), spec, index, 0, None)?[0])
}

/// Scores every point with one fused classifier call. `result[i]` equals
/// `nhc_at(classifier, &points[i], spec, i)`.
pub fn nhc_batch<C: BlackBoxClassifier + ?Sized>(
    classifier: &C,
    points: &[FeatureVector],
    spec: &NoiseSpec,
) -> Result<Vec<ConfidenceScore>> {
    score_points(classifier, points, spec, 0, 0, None)
}

/// One score per strength; strength `k` draws from stream slot `k`, so a
/// singleton list reproduces [`nhc`].
pub fn nhc_multi_strength<C: BlackBoxClassifier + ?Sized>(
    classifier: &C,
    x: &FeatureVector,
    strengths: &[f64],
    base_spec: &NoiseSpec,
) -> Result<Vec<ConfidenceScore>> {
    nhc_multi_strength_at(classifier, x, strengths, base_spec, 0)
}

pub fn nhc_multi_strength_at<C: BlackBoxClassifier + ?Sized>(
    classifier: &C,
    x: &FeatureVector,
    strengths: &[f64],
    base_spec: &NoiseSpec,
    index: u64,
) -> Result<Vec<ConfidenceScore>> {
    if strengths.is_empty() {
        return Err(Error::Empty("strengths"));
    }
    strengths
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let spec = base_spec.with_strength(s);
            Ok(score_points(classifier, std::slice::from_ref(x), &spec, index, k as u64, None)?[0])
        })
        .collect()
}

/// Batched form of [`nhc_multi_strength`]: `result[k][i]` scores point `i`
/// at `strengths[k]`. With `reference`, counts that class instead of the
/// prediction at each point.
pub fn nhc_strength_sweep<C: BlackBoxClassifier + ?Sized>(
    classifier: &C,
    points: &[FeatureVector],
    strengths: &[f64],
    base_spec: &NoiseSpec,
    reference: Option<Label>,
) -> Result<Vec<Vec<ConfidenceScore>>> {
    if strengths.is_empty() {
        return Err(Error::Empty("strengths"));
    }
    strengths
        .iter()
        .enumerate()
        .map(|(k, &s)| score_points(classifier, points, &base_spec.with_strength(s), 0, k as u64, reference))
        .collect()
}

/// Fraction of perturbed points labeled `reference`; the prediction at `x`
/// itself does not enter the count.
pub fn nhc_reference_class<C: BlackBoxClassifier + ?Sized>(
    classifier: &C,
    x: &FeatureVector,
    spec: &NoiseSpec,
    reference: Label,
) -> Result<ConfidenceScore> {
    Ok(score_points(classifier, std::slice::from_ref(x), spec, 0, 0, Some(reference))?[0])
}

/// Batched form of [`nhc_reference_class`], keyed like [`nhc_batch`].
pub fn nhc_reference_batch<C: BlackBoxClassifier + ?Sized>(
    classifier: &C,
    points: &[FeatureVector],
    spec: &NoiseSpec,
    reference: Label,
) -> Result<Vec<ConfidenceScore>> {
    score_points(classifier, points, spec, 0, 0, Some(reference))
}

/// Exact expected conformance under Rademacher noise, by enumerating all
/// `2^D` sign vectors. Not quantized.
pub fn nhc_exact_rademacher<C: BlackBoxClassifier + ?Sized>(
    classifier: &C,
    x: &FeatureVector,
    strength: f64,
) -> Result<f64> {
    let dim = x.dim();
    if dim > MAX_EXACT_DIM {
        return Err(Error::EnumerationTooLarge {
            dim,
            limit: MAX_EXACT_DIM,
        });
    }
    if !(strength > 0.0 && strength.is_finite()) {
        return Err(Error::param("strength", "must be positive and finite"));
    }
    check_dims(std::slice::from_ref(x), classifier.input_dim())?;
    let reference = classifier.classify_one(x)?;
    let total: u64 = 1 << dim;
    const CHUNK: u64 = 4096;
    let mut conforming = 0u64;
    let mut start = 0u64;
    while start < total {
        let end = (start + CHUNK).min(total);
        let batch: Vec<FeatureVector> = (start..end)
            .map(|mask| {
                let values = x
                    .iter()
                    .enumerate()
                    .map(|(j, v)| if mask >> j & 1 == 1 { v + strength } else { v - strength })
                    .collect();
                FeatureVector::from_finite(values)
            })
            .collect();
        conforming += classifier
            .classify(&batch)?
            .into_iter()
            .filter(|&l| l == reference)
            .count() as u64;
        start = end;
    }
    Ok(conforming as f64 / total as f64)
}
