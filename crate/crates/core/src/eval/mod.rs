//! Evaluation lenses: selective accuracy against a confidence threshold,
//! empirical confidence CDFs, and (via [`crate::attack`]) severity sweeps.

mod experiment;
mod export;

use serde::{Deserialize, Serialize};

use crate::classifier::Label;
use crate::error::{Error, Result};
use crate::nhc::ConfidenceScore;

pub use experiment::{
    run_experiment, AttackConfig, CdfEntry, CurveEntry, DataConfig, DataKind, EstimatorConfig, ExperimentConfig,
    ExportConfig, Metadata, ModelConfig, Protocol, ResultBundle, SweepEntry,
};
pub use export::{
    export_results, write_cdf_csv, write_sweep_csv, write_threshold_csv, ExportFormat, CDF_HEADER, SWEEP_HEADER,
    THRESHOLD_HEADER,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub threshold: f64,
    /// `None` when no prediction reaches the threshold.
    pub accuracy: Option<f64>,
    pub kept_count: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ThresholdCurve {
    pub rows: Vec<ThresholdRow>,
}

impl ThresholdCurve {
    /// The last row that still keeps at least one prediction.
    pub fn last_non_empty(&self) -> Option<&ThresholdRow> {
        self.rows.iter().rev().find(|r| r.accuracy.is_some())
    }
}

/// Thresholds `0, 0.05, .., 1`, each computed as `i / 20` so grid points are
/// the correctly rounded decimals.
pub fn default_thresholds() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

/// Accuracy over predictions whose confidence reaches each threshold.
pub fn threshold_accuracy_curve(
    truths: &[Label],
    preds: &[Label],
    confidences: &[ConfidenceScore],
    thresholds: &[f64],
) -> Result<ThresholdCurve> {
    if truths.len() != preds.len() {
        return Err(Error::LengthMismatch {
            what: "truths vs preds",
            left: truths.len(),
            right: preds.len(),
        });
    }
    if truths.len() != confidences.len() {
        return Err(Error::LengthMismatch {
            what: "truths vs confidences",
            left: truths.len(),
            right: confidences.len(),
        });
    }
    if truths.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    if thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) || thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("thresholds", "must be strictly increasing within [0, 1]"));
    }
    let rows = thresholds
        .iter()
        .map(|&t| {
            let (kept, correct) = truths
                .iter()
                .zip(preds)
                .zip(confidences)
                .filter(|(_, c)| c.meets(t))
                .fold((0usize, 0usize), |(k, c), ((y, p), _)| (k + 1, c + (y == p) as usize));
            ThresholdRow {
                threshold: t,
                accuracy: (kept > 0).then(|| correct as f64 / kept as f64),
                kept_count: kept,
            }
        })
        .collect();
    Ok(ThresholdCurve { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub confidence: f64,
    pub cumulative_fraction: f64,
}

/// Right-continuous step function over the distinct observed scores.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    pub rows: Vec<CdfRow>,
}

impl EmpiricalCdf {
    /// Fraction of scores `<= v`.
    pub fn eval(&self, v: f64) -> f64 {
        self.rows
            .iter()
            .take_while(|r| r.confidence <= v)
            .last()
            .map_or(0.0, |r| r.cumulative_fraction)
    }

    /// Smallest observed score whose cumulative fraction reaches `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        self.rows
            .iter()
            .find(|r| r.cumulative_fraction >= p - 1e-12)
            .or(self.rows.last())
            .map_or(f64::NAN, |r| r.confidence)
    }
}

pub fn empirical_cdf(confidences: &[ConfidenceScore]) -> Result<EmpiricalCdf> {
    if confidences.is_empty() {
        return Err(Error::Empty("confidences"));
    }
    let mut values: Vec<f64> = confidences.iter().map(|c| c.value()).collect();
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mut rows: Vec<CdfRow> = Vec::new();
    for (i, v) in values.iter().enumerate() {
        let fraction = (i + 1) as f64 / n;
        match rows.last_mut() {
            Some(last) if last.confidence == *v => last.cumulative_fraction = fraction,
            _ => rows.push(CdfRow {
                confidence: *v,
                cumulative_fraction: fraction,
            }),
        }
    }
    Ok(EmpiricalCdf { rows })
}
