use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use nhc_core::attack::SweepRow;
use nhc_core::eval::{
    empirical_cdf, threshold_accuracy_curve, write_cdf_csv, write_sweep_csv, write_threshold_csv, EmpiricalCdf,
    ExportFormat, ThresholdCurve,
};
use nhc_core::{ConfidenceScore, Label, LabeledDataset};
use serde::Serialize;

use crate::OutputArgs;

pub const SCORES_HEADER: [&str; 6] = ["index", "label", "prediction", "estimator", "strength", "confidence"];

/// Scores of one estimator variant over a whole dataset.
pub struct Variant {
    pub name: String,
    pub estimator: &'static str,
    pub strength: Option<f64>,
    pub scores: Vec<ConfidenceScore>,
}

#[derive(Serialize)]
struct ScoreRow {
    index: usize,
    label: Option<usize>,
    prediction: usize,
    estimator: &'static str,
    strength: Option<f64>,
    confidence: f64,
}

#[derive(Serialize)]
struct VariantReport {
    variant: String,
    mean_confidence: f64,
    curve: Option<ThresholdCurve>,
    cdf: EmpiricalCdf,
}

#[derive(Serialize)]
struct EvalReport {
    num_samples: usize,
    variants: Vec<VariantReport>,
    scores: Vec<ScoreRow>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("cannot create {}", path.display()))
}

pub fn mean(scores: &[ConfidenceScore]) -> f64 {
    scores.iter().map(|s| s.value()).sum::<f64>() / scores.len() as f64
}

/// Writes per-point scores, one CDF per variant and, for labeled data, one
/// threshold-accuracy curve per variant.
pub fn write_eval(
    out: &OutputArgs,
    data: &LabeledDataset,
    preds: &[Label],
    variants: &[Variant],
    thresholds: &[f64],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&out.out).with_context(|| format!("cannot create {}", out.out.display()))?;
    let labels = data.labels();
    let mut reports = Vec::new();
    for v in variants {
        let curve = labels
            .map(|l| threshold_accuracy_curve(l, preds, &v.scores, thresholds))
            .transpose()?;
        reports.push(VariantReport {
            variant: v.name.clone(),
            mean_confidence: mean(&v.scores),
            curve,
            cdf: empirical_cdf(&v.scores)?,
        });
    }
    let rows: Vec<ScoreRow> = variants
        .iter()
        .flat_map(|v| {
            v.scores.iter().enumerate().map(move |(i, s)| ScoreRow {
                index: i,
                label: labels.map(|l| l[i].0),
                prediction: preds[i].0,
                estimator: v.estimator,
                strength: v.strength,
                confidence: s.value(),
            })
        })
        .collect();

    let mut written = Vec::new();
    match out.format {
        ExportFormat::Json => {
            let path = out.out.join("results.json");
            let mut w = create(&path)?;
            let report = EvalReport {
                num_samples: variants
                    .first()
                    .map_or(0, |v| v.scores.first().map_or(0, |s| s.denominator)),
                variants: reports,
                scores: rows,
            };
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
            w.flush()?;
            written.push(path);
        }
        ExportFormat::Csv => {
            let path = out.out.join("scores.csv");
            let mut csv = csv::Writer::from_writer(create(&path)?);
            csv.write_record(SCORES_HEADER)?;
            for r in &rows {
                csv.write_record([
                    r.index.to_string(),
                    r.label.map(|l| l.to_string()).unwrap_or_default(),
                    r.prediction.to_string(),
                    r.estimator.to_string(),
                    r.strength.map(|s| s.to_string()).unwrap_or_default(),
                    r.confidence.to_string(),
                ])?;
            }
            csv.flush()?;
            written.push(path);
            for r in &reports {
                if let Some(curve) = &r.curve {
                    let path = out.out.join(format!("threshold_{}.csv", r.variant));
                    let mut w = create(&path)?;
                    write_threshold_csv(curve, &mut w)?;
                    w.flush()?;
                    written.push(path);
                }
                let path = out.out.join(format!("cdf_{}.csv", r.variant));
                let mut w = create(&path)?;
                write_cdf_csv(&r.cdf, &mut w)?;
                w.flush()?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

pub fn write_sweep(out: &OutputArgs, rows: &[SweepRow]) -> Result<PathBuf> {
    fs::create_dir_all(&out.out).with_context(|| format!("cannot create {}", out.out.display()))?;
    let path = match out.format {
        ExportFormat::Json => out.out.join("adv_sweep.json"),
        ExportFormat::Csv => out.out.join("adv_sweep.csv"),
    };
    let mut w = create(&path)?;
    match out.format {
        ExportFormat::Json => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
        }
        ExportFormat::Csv => write_sweep_csv(rows, &mut w)?,
    }
    w.flush()?;
    Ok(path)
}
