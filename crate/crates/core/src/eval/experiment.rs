//! Config-driven experiment runner.
//!
//! One JSON document describes the model, the data regimes, the estimator
//! variants and which protocols to run:
//!
//! * `shift`: threshold-accuracy curve of every variant on the shifted set;
//! * `ood`: confidence CDFs on the out-of-domain set and on held-out
//!   in-domain data;
//! * `adv`: PGD severity sweep of every variant.
//!
//! Every random choice is derived from the top-level `seed`, so a config
//! fully determines its outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::export::{export_results, ExportFormat};
use super::{default_thresholds, empirical_cdf, threshold_accuracy_curve, EmpiricalCdf, ThresholdCurve};
use crate::abc::AbcConfig;
use crate::attack::{default_epsilon_grid, epsilon_sweep, PgdConfig, SweepEstimator, SweepRow, DEFAULT_PGD_STEPS};
use crate::classifier::{load_checkpoint, train_sgd, BlackBoxClassifier, Label, MlpModel, TrainConfig};
use crate::data::{
    apply_shift, interleaved_split, make_blobs, make_glyphs, make_ood, Centers, LabeledDataset, Regime, ShiftConfig,
};
use crate::error::{Error, Result};
use crate::nhc::{NoiseDistribution, NoiseSpec, DEFAULT_NUM_SAMPLES, DEFAULT_STRENGTH};
use crate::rng::mix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub data: DataConfig,
    pub estimators: Vec<EstimatorConfig>,
    pub protocol: Vec<Protocol>,
    #[serde(default)]
    pub attack: AttackConfig,
    #[serde(default)]
    pub export: ExportConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Load this checkpoint instead of training.
    pub checkpoint: Option<PathBuf>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden: vec![16, 16],
            lr: 0.1,
            epochs: 60,
            batch_size: 32,
            checkpoint: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    #[default]
    Blobs,
    Glyphs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub kind: DataKind,
    pub num_classes: usize,
    pub per_class: usize,
    /// Blob spread (blobs only).
    pub std: f64,
    /// Feature dimension (blobs only).
    pub dim: usize,
    /// Glyph side length (glyphs only).
    pub side: usize,
    /// Per-pixel jitter (glyphs only).
    pub jitter: f64,
    /// Shift applied to held-out data; `None` uses the default profile.
    pub shift: Option<ShiftConfig>,
    pub ood_points: usize,
    pub ood_min_distance: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            kind: DataKind::Blobs,
            num_classes: 3,
            per_class: 200,
            std: 0.5,
            dim: 2,
            side: 8,
            jitter: 0.15,
            shift: None,
            ood_points: 300,
            ood_min_distance: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorConfig {
    Nhc {
        #[serde(default = "default_strength")]
        strength: f64,
        #[serde(default)]
        num_samples: Option<usize>,
        #[serde(default)]
        distribution: NoiseDistribution,
        #[serde(default)]
        reference_class: Option<usize>,
        /// Clamp perturbations to the data's natural bounds; defaults to on
        /// for image data and off otherwise.
        #[serde(default)]
        clip: Option<bool>,
    },
    Abc {
        #[serde(default)]
        num_samples: Option<usize>,
        /// Step for unbounded features; defaults to the first NHC strength.
        #[serde(default)]
        strength: Option<f64>,
    },
}

fn default_strength() -> f64 {
    DEFAULT_STRENGTH
}

impl EstimatorConfig {
    pub fn nhc(strength: f64) -> Self {
        EstimatorConfig::Nhc {
            strength,
            num_samples: None,
            distribution: NoiseDistribution::Rademacher,
            reference_class: None,
            clip: None,
        }
    }

    pub fn abc() -> Self {
        EstimatorConfig::Abc {
            num_samples: None,
            strength: None,
        }
    }

    fn explicit_samples(&self) -> Option<usize> {
        match self {
            EstimatorConfig::Nhc { num_samples, .. } | EstimatorConfig::Abc { num_samples, .. } => *num_samples,
        }
    }

    /// Stable, file-name-safe variant label.
    pub fn variant(&self) -> String {
        match self {
            EstimatorConfig::Nhc {
                strength,
                distribution,
                reference_class,
                ..
            } => {
                let mut name = format!("nhc_l{strength}");
                if *distribution != NoiseDistribution::Rademacher {
                    name.push('_');
                    name.push_str(distribution.as_str());
                }
                if let Some(r) = reference_class {
                    name.push_str(&format!("_ref{r}"));
                }
                name
            }
            EstimatorConfig::Abc { .. } => "abc".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Shift,
    Ood,
    Adv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackConfig {
    /// Explicit grid; defaults to `0..=0.25` step 0.025 times `epsilon_scale`.
    pub epsilons: Option<Vec<f64>>,
    pub epsilon_scale: f64,
    pub num_steps: usize,
    pub random_start: bool,
    /// Attack only the first `max_points` points of the target set.
    pub max_points: Option<usize>,
    /// Which labeled set is attacked.
    pub target: Regime,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            epsilons: None,
            epsilon_scale: 1.0,
            num_steps: DEFAULT_PGD_STEPS,
            random_start: true,
            max_points: None,
            target: Regime::Shifted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExportConfig {
    pub format: ExportFormat,
    pub thresholds: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)
            .map_err(|e| Error::config(format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// The shared per-point sample budget of every estimator.
    pub fn num_samples(&self) -> usize {
        self.estimators
            .iter()
            .find_map(EstimatorConfig::explicit_samples)
            .unwrap_or(DEFAULT_NUM_SAMPLES)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if m.hidden.contains(&0) {
            return Err(Error::config("model.hidden", "layer widths must be positive"));
        }
        if !(m.lr >= 0.0 && m.lr.is_finite()) {
            return Err(Error::config("model.lr", "must be finite and non-negative"));
        }
        if m.batch_size == 0 {
            return Err(Error::config("model.batch_size", "must be positive"));
        }
        let d = &self.data;
        if d.num_classes < 2 {
            return Err(Error::config("data.num_classes", "need at least two classes"));
        }
        if d.per_class == 0 {
            return Err(Error::config("data.per_class", "must be positive"));
        }
        match d.kind {
            DataKind::Blobs if !(d.std > 0.0 && d.std.is_finite()) => {
                return Err(Error::config("data.std", "must be positive"));
            }
            DataKind::Blobs if d.dim == 0 => return Err(Error::config("data.dim", "must be positive")),
            DataKind::Glyphs if d.side < 2 => return Err(Error::config("data.side", "must be at least 2")),
            DataKind::Glyphs if !(d.jitter >= 0.0 && d.jitter.is_finite()) => {
                return Err(Error::config("data.jitter", "must be non-negative"));
            }
            _ => {}
        }
        if d.ood_min_distance.is_nan() || d.ood_min_distance <= 0.0 {
            return Err(Error::config("data.ood_min_distance", "must be positive"));
        }
        if self.estimators.is_empty() {
            return Err(Error::config("estimators", "at least one estimator is required"));
        }
        let budget = self.num_samples();
        if budget == 0 {
            return Err(Error::config("estimators", "num_samples must be at least 1"));
        }
        for (i, e) in self.estimators.iter().enumerate() {
            if let Some(n) = e.explicit_samples() {
                if n != budget {
                    return Err(Error::config(
                        format!("estimators[{i}].num_samples"),
                        format!("{n} differs from the shared budget {budget}; compared estimators must use the same N"),
                    ));
                }
            }
            match e {
                EstimatorConfig::Nhc {
                    strength,
                    reference_class,
                    ..
                } => {
                    if !(*strength > 0.0 && strength.is_finite()) {
                        return Err(Error::config(format!("estimators[{i}].strength"), "must be positive"));
                    }
                    if reference_class.is_some_and(|r| r >= d.num_classes) {
                        return Err(Error::config(
                            format!("estimators[{i}].reference_class"),
                            format!("must be below num_classes = {}", d.num_classes),
                        ));
                    }
                }
                EstimatorConfig::Abc { strength, .. } => {
                    if strength.is_some_and(|s| !(s > 0.0 && s.is_finite())) {
                        return Err(Error::config(format!("estimators[{i}].strength"), "must be positive"));
                    }
                }
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, e) in self.estimators.iter().enumerate() {
            if !seen.insert(e.variant()) {
                return Err(Error::config(
                    format!("estimators[{i}]"),
                    format!("duplicate variant `{}`", e.variant()),
                ));
            }
        }
        if self.protocol.is_empty() {
            return Err(Error::config("protocol", "select at least one of shift, ood, adv"));
        }
        let a = &self.attack;
        if let Some(eps) = &a.epsilons {
            if eps.is_empty()
                || eps.iter().any(|e| !(*e >= 0.0 && e.is_finite()))
                || eps.windows(2).any(|w| w[0] > w[1])
            {
                return Err(Error::config(
                    "attack.epsilons",
                    "need a non-empty ascending list of non-negative values",
                ));
            }
        }
        if !(a.epsilon_scale > 0.0 && a.epsilon_scale.is_finite()) {
            return Err(Error::config("attack.epsilon_scale", "must be positive"));
        }
        if a.num_steps == 0 {
            return Err(Error::config("attack.num_steps", "must be positive"));
        }
        if a.target == Regime::Ood {
            return Err(Error::config(
                "attack.target",
                "out-of-domain data has no labels to attack",
            ));
        }
        if let Some(t) = &self.export.thresholds {
            if t.is_empty() || t.iter().any(|v| !(0.0..=1.0).contains(v)) || t.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::config(
                    "export.thresholds",
                    "must be strictly increasing within [0, 1]",
                ));
            }
        }
        Ok(())
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.attack
            .epsilons
            .clone()
            .unwrap_or_else(|| default_epsilon_grid(self.attack.epsilon_scale))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub seed: u64,
    pub model_digest: String,
    pub layer_dims: Vec<usize>,
    pub final_train_loss: Option<f64>,
    /// Top-1 accuracy per labeled set (`train`, `in_domain`, `shifted`).
    pub accuracy: BTreeMap<String, f64>,
    pub num_samples: usize,
    pub estimators: Vec<EstimatorConfig>,
    pub protocol: Vec<Protocol>,
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveEntry {
    pub variant: String,
    pub num_samples: usize,
    pub curve: ThresholdCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfEntry {
    pub variant: String,
    pub regime: Regime,
    pub num_samples: usize,
    pub mean_confidence: f64,
    pub cdf: EmpiricalCdf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub variant: String,
    pub num_samples: usize,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub metadata: Metadata,
    pub curves: Vec<CurveEntry>,
    pub cdfs: Vec<CdfEntry>,
    pub sweeps: Vec<SweepEntry>,
}

impl ResultBundle {
    /// Writes the bundle in the format the config asked for.
    pub fn export(&self, dir: impl AsRef<Path>, format: ExportFormat) -> Result<Vec<PathBuf>> {
        export_results(self, dir, format)
    }
}

struct Datasets {
    train: LabeledDataset,
    in_domain: LabeledDataset,
    shifted: LabeledDataset,
    ood: LabeledDataset,
}

fn sub_seed(seed: u64, purpose: u64) -> u64 {
    mix(&[seed, purpose])
}

fn build_datasets(config: &ExperimentConfig) -> Result<Datasets> {
    let d = &config.data;
    let seed = config.seed;
    let generate = |s: u64| match d.kind {
        DataKind::Blobs => make_blobs(d.num_classes, 2 * d.per_class, &Centers::Auto { dim: d.dim }, d.std, s),
        DataKind::Glyphs => make_glyphs(d.num_classes, 2 * d.per_class, d.side, d.jitter, s),
    };
    // One double-size generation split in two, so glyph halves share their
    // class templates.
    let (train, in_domain) = interleaved_split(&generate(seed)?)?;
    let shift_cfg = match &d.shift {
        Some(s) => ShiftConfig {
            seed: sub_seed(seed, 2),
            ..s.clone()
        },
        None => ShiftConfig::default_profile(&train, sub_seed(seed, 2)),
    };
    let shifted = apply_shift(&in_domain, &shift_cfg)?;
    let ood = make_ood(d.ood_points, &train, d.ood_min_distance, sub_seed(seed, 3))?;
    Ok(Datasets {
        train,
        in_domain,
        shifted,
        ood,
    })
}

fn accuracy(model: &MlpModel, data: &LabeledDataset) -> Result<f64> {
    let labels = data.labels().ok_or_else(|| Error::param("data", "unlabeled"))?;
    let preds = model.classify(data.points())?;
    Ok(preds.iter().zip(labels).filter(|(p, t)| p == t).count() as f64 / labels.len() as f64)
}

fn sweep_estimator(config: &ExperimentConfig, e: &EstimatorConfig, layout: crate::data::Layout) -> SweepEstimator {
    let n = config.num_samples();
    match e {
        EstimatorConfig::Nhc {
            strength,
            distribution,
            reference_class,
            clip,
            ..
        } => {
            let clip_bounds = match clip {
                Some(false) => None,
                _ => layout.clip_bounds(),
            };
            let spec = NoiseSpec {
                distribution: *distribution,
                strength: *strength,
                num_samples: n,
                seed: sub_seed(config.seed, 10),
                clip_bounds,
            };
            match reference_class {
                Some(r) => SweepEstimator::NhcRef {
                    spec,
                    reference: Label(*r),
                },
                None => SweepEstimator::Nhc(spec),
            }
        }
        EstimatorConfig::Abc { strength, .. } => {
            let step = strength.unwrap_or_else(|| {
                config
                    .estimators
                    .iter()
                    .find_map(|e| match e {
                        EstimatorConfig::Nhc { strength, .. } => Some(*strength),
                        _ => None,
                    })
                    .unwrap_or(DEFAULT_STRENGTH)
            });
            AbcConfig::for_layout(layout, n, sub_seed(config.seed, 11), step)
        }
        .into(),
    }
}

impl From<AbcConfig> for SweepEstimator {
    fn from(cfg: AbcConfig) -> Self {
        SweepEstimator::Abc(cfg)
    }
}

fn mean(scores: &[crate::nhc::ConfidenceScore]) -> f64 {
    scores.iter().map(|s| s.value()).sum::<f64>() / scores.len() as f64
}

/// Trains (or loads) the model, builds the data regimes and runs every
/// selected protocol for every estimator variant.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultBundle> {
    config.validate()?;
    let data = build_datasets(config)?;
    let dim = data.train.dim().expect("non-empty");
    let layout = data.train.layout();

    let (model, final_train_loss) = match &config.model.checkpoint {
        Some(path) => (load_checkpoint(path)?, None),
        None => {
            let dims: Vec<usize> = std::iter::once(dim)
                .chain(config.model.hidden.iter().copied())
                .chain(std::iter::once(config.data.num_classes))
                .collect();
            let init = MlpModel::new(&dims, sub_seed(config.seed, 20))?;
            let train_cfg = TrainConfig {
                lr: config.model.lr,
                epochs: config.model.epochs,
                batch_size: config.model.batch_size,
                seed: sub_seed(config.seed, 21),
            };
            let report = train_sgd(&init, &data.train, &train_cfg)?;
            let last = report.loss_trace.last().copied();
            (report.model, last)
        }
    };
    if model.input_dim() != dim || model.num_classes() != config.data.num_classes {
        return Err(Error::config(
            "model.checkpoint",
            format!(
                "model maps {} -> {} but data has dim {} and {} classes",
                model.input_dim(),
                model.num_classes(),
                dim,
                config.data.num_classes
            ),
        ));
    }

    let mut acc = BTreeMap::new();
    acc.insert("train".to_string(), accuracy(&model, &data.train)?);
    acc.insert("in_domain".to_string(), accuracy(&model, &data.in_domain)?);
    acc.insert("shifted".to_string(), accuracy(&model, &data.shifted)?);

    let n = config.num_samples();
    let thresholds = config.export.thresholds.clone().unwrap_or_else(default_thresholds);
    let mut protocols = config.protocol.clone();
    protocols.sort();
    protocols.dedup();

    let mut curves = Vec::new();
    let mut cdfs = Vec::new();
    let mut sweeps = Vec::new();
    for e in &config.estimators {
        let estimator = sweep_estimator(config, e, layout);
        let variant = e.variant();
        for protocol in &protocols {
            match protocol {
                Protocol::Shift => {
                    let scores = estimator.score(&model, data.shifted.points())?;
                    let preds = model.classify(data.shifted.points())?;
                    let truths = data.shifted.labels().expect("shifted data is labeled");
                    curves.push(CurveEntry {
                        variant: variant.clone(),
                        num_samples: n,
                        curve: threshold_accuracy_curve(truths, &preds, &scores, &thresholds)?,
                    });
                }
                Protocol::Ood => {
                    for set in [&data.ood, &data.in_domain] {
                        if set.is_empty() {
                            continue;
                        }
                        let scores = estimator.score(&model, set.points())?;
                        cdfs.push(CdfEntry {
                            variant: variant.clone(),
                            regime: set.regime(),
                            num_samples: n,
                            mean_confidence: mean(&scores),
                            cdf: empirical_cdf(&scores)?,
                        });
                    }
                }
                Protocol::Adv => {
                    let target = match config.attack.target {
                        Regime::InDomain => &data.in_domain,
                        _ => &data.shifted,
                    };
                    let target = match config.attack.max_points {
                        Some(k) if k < target.len() => LabeledDataset::from_parts(
                            target.points()[..k].to_vec(),
                            target.labels().map(|l| l[..k].to_vec()),
                            target.num_classes(),
                            target.regime(),
                            target.layout(),
                        )?,
                        _ => target.clone(),
                    };
                    let pgd = PgdConfig {
                        num_steps: config.attack.num_steps,
                        random_start: config.attack.random_start,
                        clip_bounds: layout.clip_bounds(),
                        seed: sub_seed(config.seed, 30),
                        ..PgdConfig::with_epsilon(0.0)
                    };
                    sweeps.push(SweepEntry {
                        variant: variant.clone(),
                        num_samples: n,
                        rows: epsilon_sweep(&model, &target, &config.epsilons(), &estimator, &pgd)?,
                    });
                }
            }
        }
    }

    Ok(ResultBundle {
        metadata: Metadata {
            seed: config.seed,
            model_digest: format!("{:016x}", model.digest()),
            layer_dims: model.layer_dims(),
            final_train_loss,
            accuracy: acc,
            num_samples: n,
            estimators: config.estimators.clone(),
            protocol: protocols,
            epsilons: if config.protocol.contains(&Protocol::Adv) {
                config.epsilons()
            } else {
                Vec::new()
            },
        },
        curves,
        cdfs,
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig {
            seed: 3,
            model: ModelConfig {
                epochs: 20,
                ..ModelConfig::default()
            },
            data: DataConfig {
                per_class: 60,
                ood_points: 60,
                ..DataConfig::default()
            },
            estimators: vec![EstimatorConfig::nhc(0.4), EstimatorConfig::abc()],
            protocol: vec![Protocol::Shift, Protocol::Ood],
            attack: AttackConfig::default(),
            export: ExportConfig::default(),
        }
    }

    #[test]
    fn budget_mismatch_is_a_field_error() {
        let mut cfg = base();
        cfg.estimators = vec![
            EstimatorConfig::Nhc {
                strength: 0.4,
                num_samples: Some(7),
                distribution: NoiseDistribution::Rademacher,
                reference_class: None,
                clip: None,
            },
            EstimatorConfig::Abc {
                num_samples: Some(9),
                strength: None,
            },
        ];
        match cfg.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "estimators[1].num_samples"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_errors_and_unknown_fields() {
        assert!(ExperimentConfig::from_json("{").is_err());
        let unknown = r#"{"seed": 1, "estimators": [{"kind": "nhc"}], "protocol": ["shift"], "bogus": 1}"#;
        assert!(matches!(
            ExperimentConfig::from_json(unknown),
            Err(Error::Config { .. })
        ));
        let ok = r#"{"seed": 1, "estimators": [{"kind": "nhc", "strength": 0.3}, {"kind": "abc"}], "protocol": ["shift", "ood", "adv"]}"#;
        let cfg = ExperimentConfig::from_json(ok).unwrap();
        assert_eq!(cfg.num_samples(), 7);
        assert_eq!(cfg.estimators[0].variant(), "nhc_l0.3");
        let bad_ref = r#"{"seed": 1, "estimators": [{"kind": "nhc", "reference_class": 9}], "protocol": ["shift"]}"#;
        match ExperimentConfig::from_json(bad_ref) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "estimators[0].reference_class"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn shift_and_ood_layout() {
        let bundle = run_experiment(&base()).unwrap();
        assert_eq!(bundle.curves.len(), 2);
        assert_eq!(bundle.curves[0].variant, "nhc_l0.4");
        assert_eq!(bundle.curves[1].variant, "abc");
        assert_eq!(bundle.cdfs.len(), 4);
        assert!(bundle.cdfs.iter().all(|c| c.num_samples == 7));
        assert!(bundle.sweeps.is_empty());
        assert!(bundle.metadata.accuracy["train"] > 0.9);
    }

    #[test]
    fn glyph_experiment_runs() {
        let mut cfg = base();
        cfg.data = DataConfig {
            kind: DataKind::Glyphs,
            per_class: 20,
            ood_points: 20,
            ood_min_distance: 1.0,
            ..DataConfig::default()
        };
        cfg.protocol = vec![Protocol::Adv];
        cfg.attack.epsilons = Some(vec![0.0, 0.1]);
        cfg.attack.max_points = Some(10);
        let bundle = run_experiment(&cfg).unwrap();
        assert_eq!(bundle.sweeps.len(), 2);
        assert_eq!(bundle.sweeps[0].rows.len(), 2);
        assert_eq!(bundle.metadata.layer_dims[0], 64);
    }
}
