//! CSV and JSON writers for experiment results.
//!
//! Floats are printed in shortest round-trip form, so identical inputs give
//! byte-identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::experiment::ResultBundle;
use super::{EmpiricalCdf, ThresholdCurve};
use crate::attack::SweepRow;
use crate::error::{Error, Result};

pub const THRESHOLD_HEADER: [&str; 3] = ["threshold", "accuracy", "kept_count"];
pub const CDF_HEADER: [&str; 2] = ["confidence", "cumulative_fraction"];
pub const SWEEP_HEADER: [&str; 5] = ["epsilon", "mean_confidence", "accuracy", "estimator", "strength"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::param("format", format!("expected csv or json, got `{other}`"))),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_threshold_csv<W: Write>(curve: &ThresholdCurve, writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(THRESHOLD_HEADER)?;
    for r in &curve.rows {
        csv.write_record([r.threshold.to_string(), opt(r.accuracy), r.kept_count.to_string()])?;
    }
    csv.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn write_cdf_csv<W: Write>(cdf: &EmpiricalCdf, writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(CDF_HEADER)?;
    for r in &cdf.rows {
        csv.write_record([r.confidence.to_string(), r.cumulative_fraction.to_string()])?;
    }
    csv.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn write_sweep_csv<'a, W: Write>(rows: impl IntoIterator<Item = &'a SweepRow>, writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(SWEEP_HEADER)?;
    for r in rows {
        csv.write_record([
            r.epsilon.to_string(),
            r.mean_confidence.to_string(),
            r.accuracy.to_string(),
            r.estimator.clone(),
            opt(r.strength),
        ])?;
    }
    csv.flush().map_err(|e| Error::io("<csv>", e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `bundle` under `dir` and returns the files written.
///
/// CSV: `shift_<variant>.csv`, `ood_<variant>_<regime>.csv` and
/// `adv_sweep.csv` (only for protocols that ran). JSON: a single
/// `results.json` holding the whole bundle.
pub fn export_results(bundle: &ResultBundle, dir: impl AsRef<Path>, format: ExportFormat) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    match format {
        ExportFormat::Json => {
            let path = dir.join("results.json");
            let mut w = create(&path)?;
            serde_json::to_writer_pretty(&mut w, bundle)?;
            w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
            finish(&path, w)?;
            written.push(path);
        }
        ExportFormat::Csv => {
            for entry in &bundle.curves {
                let path = dir.join(format!("shift_{}.csv", entry.variant));
                let mut w = create(&path)?;
                write_threshold_csv(&entry.curve, &mut w)?;
                finish(&path, w)?;
                written.push(path);
            }
            for entry in &bundle.cdfs {
                let path = dir.join(format!("ood_{}_{}.csv", entry.variant, entry.regime.as_str()));
                let mut w = create(&path)?;
                write_cdf_csv(&entry.cdf, &mut w)?;
                finish(&path, w)?;
                written.push(path);
            }
            if !bundle.sweeps.is_empty() {
                let path = dir.join("adv_sweep.csv");
                let mut w = create(&path)?;
                write_sweep_csv(bundle.sweeps.iter().flat_map(|s| &s.rows), &mut w)?;
                finish(&path, w)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{CdfRow, ThresholdRow};

    fn text(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn empty_inputs_give_header_only() {
        assert_eq!(
            text(|w| write_threshold_csv(&ThresholdCurve::default(), w)),
            "threshold,accuracy,kept_count\n"
        );
        assert_eq!(
            text(|w| write_cdf_csv(&EmpiricalCdf::default(), w)),
            "confidence,cumulative_fraction\n"
        );
        assert_eq!(
            text(|w| write_sweep_csv(&[], w)),
            "epsilon,mean_confidence,accuracy,estimator,strength\n"
        );
    }

    #[test]
    fn empty_bucket_leaves_accuracy_blank() {
        let curve = ThresholdCurve {
            rows: vec![
                ThresholdRow {
                    threshold: 0.0,
                    accuracy: Some(0.75),
                    kept_count: 4,
                },
                ThresholdRow {
                    threshold: 0.5,
                    accuracy: None,
                    kept_count: 0,
                },
            ],
        };
        assert_eq!(
            text(|w| write_threshold_csv(&curve, w)),
            "threshold,accuracy,kept_count\n0,0.75,4\n0.5,,0\n"
        );
        let cdf = EmpiricalCdf {
            rows: vec![CdfRow {
                confidence: 0.5,
                cumulative_fraction: 1.0,
            }],
        };
        assert_eq!(
            text(|w| write_cdf_csv(&cdf, w)),
            "confidence,cumulative_fraction\n0.5,1\n"
        );
    }

    #[test]
    fn sweep_rows_render_strength_blank_for_abc() {
        let rows = [
            SweepRow {
                epsilon: 0.0,
                mean_confidence: 0.9,
                accuracy: 1.0,
                estimator: "nhc".into(),
                strength: Some(0.4),
                histogram: vec![],
            },
            SweepRow {
                epsilon: 0.1,
                mean_confidence: 0.5,
                accuracy: 0.5,
                estimator: "abc".into(),
                strength: None,
                histogram: vec![],
            },
        ];
        assert_eq!(
            text(|w| write_sweep_csv(&rows, w)),
            "epsilon,mean_confidence,accuracy,estimator,strength\n0,0.9,1,nhc,0.4\n0.1,0.5,0.5,abc,\n"
        );
    }
}
