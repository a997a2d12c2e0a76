//! L-infinity projected gradient descent and severity sweeps.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abc::{abc_batch, AbcConfig};
use crate::classifier::{check_dims, FeatureVector, Label, Objective, WhiteBoxClassifier};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::nhc::{nhc_batch, nhc_reference_batch, ConfidenceScore, NoiseSpec};
use crate::rng::{stream, StreamTag};

pub const DEFAULT_PGD_STEPS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgdConfig {
    pub epsilon: f64,
    pub step_size: f64,
    pub num_steps: usize,
    pub random_start: bool,
    pub clip_bounds: Option<(f64, f64)>,
    pub seed: u64,
    /// Descend the loss of this class instead of ascending the true-label loss.
    pub target: Option<Label>,
}

impl PgdConfig {
    /// 20 steps of size `2.5 * epsilon / 20` with a random start.
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            step_size: 2.5 * epsilon / DEFAULT_PGD_STEPS as f64,
            num_steps: DEFAULT_PGD_STEPS,
            random_start: true,
            clip_bounds: None,
            seed: 0,
            target: None,
        }
    }

    /// Same schedule shape at a different budget.
    pub fn rescaled(&self, epsilon: f64) -> Self {
        Self {
            epsilon,
            step_size: 2.5 * epsilon / self.num_steps as f64,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::param("epsilon", "must be finite and non-negative"));
        }
        // The step size is irrelevant when the budget is zero.
        if self.epsilon > 0.0 && !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::param("step_size", "must be positive and finite"));
        }
        if self.num_steps == 0 {
            return Err(Error::param("num_steps", "must be at least 1"));
        }
        if let Some((lo, hi)) = self.clip_bounds {
            if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
                return Err(Error::param("clip_bounds", "need finite lo < hi"));
            }
        }
        Ok(())
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// PGD with the random start of point index 0.
pub fn pgd_attack<M: WhiteBoxClassifier + ?Sized>(
    model: &M,
    x: &FeatureVector,
    true_label: Label,
    cfg: &PgdConfig,
) -> Result<FeatureVector> {
    pgd_attack_at(model, x, true_label, cfg, 0)
}

/// PGD whose random start is keyed by `(cfg.seed, index)`.
///
/// The result lies within `epsilon` of `x` in L-infinity and inside
/// `clip_bounds` when set; `epsilon == 0` returns `x` unchanged.
pub fn pgd_attack_at<M: WhiteBoxClassifier + ?Sized>(
    model: &M,
    x: &FeatureVector,
    true_label: Label,
    cfg: &PgdConfig,
    index: u64,
) -> Result<FeatureVector> {
    cfg.validate()?;
    check_dims(std::slice::from_ref(x), model.input_dim())?;
    true_label.checked(model.num_classes())?;
    if let Some(t) = cfg.target {
        t.checked(model.num_classes())?;
    }
    if cfg.epsilon == 0.0 {
        return Ok(x.clone());
    }
    let (lo, hi) = cfg.clip_bounds.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    if x.iter().any(|v| *v < lo || *v > hi) {
        return Err(Error::param("x", "starting point lies outside clip bounds"));
    }
    let eps = cfg.epsilon;
    let project = |v: &mut [f64]| {
        for (vi, &oi) in v.iter_mut().zip(x.iter()) {
            *vi = vi.clamp(lo, hi).clamp(oi - eps, oi + eps);
        }
    };

    let mut cur = x.values().to_vec();
    if cfg.random_start {
        let mut rng = stream(cfg.seed, StreamTag::PgdStart, &[index]);
        cur.iter_mut().for_each(|v| *v += rng.random_range(-eps..=eps));
        project(&mut cur);
    }
    let (objective, direction) = match cfg.target {
        Some(t) => (Objective::Loss(t), -1.0),
        None => (Objective::Loss(true_label), 1.0),
    };
    for _ in 0..cfg.num_steps {
        let grad = model.input_gradient(&FeatureVector::from_finite(cur.clone()), objective)?;
        for (v, g) in cur.iter_mut().zip(grad) {
            *v += direction * cfg.step_size * sign(g);
        }
        project(&mut cur);
    }
    Ok(FeatureVector::from_finite(cur))
}

/// Confidence estimator applied to attacked points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepEstimator {
    Nhc(NoiseSpec),
    NhcRef { spec: NoiseSpec, reference: Label },
    Abc(AbcConfig),
}

impl SweepEstimator {
    pub fn name(&self) -> &'static str {
        match self {
            SweepEstimator::Nhc(_) => "nhc",
            SweepEstimator::NhcRef { .. } => "nhc_ref",
            SweepEstimator::Abc(_) => "abc",
        }
    }

    pub fn strength(&self) -> Option<f64> {
        match self {
            SweepEstimator::Nhc(s) | SweepEstimator::NhcRef { spec: s, .. } => Some(s.strength),
            SweepEstimator::Abc(_) => None,
        }
    }

    pub fn num_samples(&self) -> usize {
        match self {
            SweepEstimator::Nhc(s) | SweepEstimator::NhcRef { spec: s, .. } => s.num_samples,
            SweepEstimator::Abc(c) => c.num_samples,
        }
    }

    /// Scores `points`, point `i` on stream index `i`.
    pub fn score<M: WhiteBoxClassifier + ?Sized>(
        &self,
        model: &M,
        points: &[FeatureVector],
    ) -> Result<Vec<ConfidenceScore>> {
        match self {
            SweepEstimator::Nhc(spec) => nhc_batch(model, points, spec),
            SweepEstimator::NhcRef { spec, reference } => nhc_reference_batch(model, points, spec, *reference),
            SweepEstimator::Abc(cfg) => abc_batch(model, points, cfg),
        }
    }
}

/// One severity level of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub mean_confidence: f64,
    pub accuracy: f64,
    pub estimator: String,
    pub strength: Option<f64>,
    /// `histogram[c]` counts points whose score numerator is `c`.
    pub histogram: Vec<usize>,
}

/// The default severity grid: 0 to 0.25 in steps of 0.025, times `scale`.
/// Each point is `i * scale / 40`, one rounding, so exact grids print cleanly.
pub fn default_epsilon_grid(scale: f64) -> Vec<f64> {
    (0..=10).map(|i| i as f64 * scale / 40.0).collect()
}

/// Attacks every labeled point at each epsilon and scores the result.
pub fn epsilon_sweep<M: WhiteBoxClassifier + ?Sized>(
    model: &M,
    data: &LabeledDataset,
    epsilons: &[f64],
    estimator: &SweepEstimator,
    pgd: &PgdConfig,
) -> Result<Vec<SweepRow>> {
    let labels = data
        .labels()
        .ok_or_else(|| Error::param("data", "sweeps need labeled data"))?;
    if data.is_empty() {
        return Err(Error::Empty("sweep data"));
    }
    if epsilons.iter().any(|e| e.is_nan()) || epsilons.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::param("epsilons", "must be sorted ascending"));
    }
    check_dims(data.points(), model.input_dim())?;
    epsilons
        .iter()
        .map(|&eps| {
            let cfg = pgd.rescaled(eps);
            let attacked = attack_all(model, data.points(), labels, &cfg)?;
            let preds = model.classify(&attacked)?;
            let scores = estimator.score(model, &attacked)?;
            let n = data.len() as f64;
            let mut histogram = vec![0; estimator.num_samples() + 1];
            scores.iter().for_each(|s| histogram[s.count] += 1);
            Ok(SweepRow {
                epsilon: eps,
                mean_confidence: scores.iter().map(|s| s.value()).sum::<f64>() / n,
                accuracy: preds.iter().zip(labels).filter(|(p, t)| p == t).count() as f64 / n,
                estimator: estimator.name().to_string(),
                strength: estimator.strength(),
                histogram,
            })
        })
        .collect()
}

/// PGD on every point, point `i` keyed by index `i`.
pub fn attack_all<M: WhiteBoxClassifier + ?Sized>(
    model: &M,
    points: &[FeatureVector],
    labels: &[Label],
    cfg: &PgdConfig,
) -> Result<Vec<FeatureVector>> {
    points
        .par_iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (x, &y))| pgd_attack_at(model, x, y, cfg, i as u64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{BlackBoxClassifier, Dense, MlpModel};
    use proptest::prelude::*;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    /// Logits (0, w.x + b): a binary logistic model.
    fn logistic(w: &[f64], b: f64) -> MlpModel {
        MlpModel::from_layers(vec![
            Dense::new(vec![vec![0.0; w.len()], w.to_vec()], vec![0.0, b]).unwrap()
        ])
        .unwrap()
    }

    #[test]
    fn zero_budget_is_identity() {
        let m = MlpModel::new(&[3, 5, 2], 1).unwrap();
        let x = fv(&[0.3, -0.1, 0.7]);
        assert_eq!(pgd_attack(&m, &x, Label(1), &PgdConfig::with_epsilon(0.0)).unwrap(), x);
    }

    #[test]
    fn one_step_follows_weight_signs() {
        // Loss of label 1 is -log sigmoid(w.x + b); its x-gradient is
        // -(1 - p) w, so ascent moves each coordinate by -alpha * sign(w).
        let w = [0.5, -2.0, 0.0, 1.0];
        let m = logistic(&w, 0.1);
        let x = fv(&[0.2, 0.2, 0.2, 0.2]);
        let cfg = PgdConfig {
            epsilon: 0.1,
            step_size: 0.05,
            num_steps: 1,
            random_start: false,
            clip_bounds: None,
            seed: 0,
            target: None,
        };
        let adv = pgd_attack(&m, &x, Label(1), &cfg).unwrap();
        let delta: Vec<f64> = adv.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let expected = [-0.05, 0.05, 0.0, -0.05];
        for (d, e) in delta.iter().zip(expected) {
            assert!((d - e).abs() < 1e-15);
        }
        // Larger step gets projected back onto the budget.
        let big = PgdConfig { step_size: 1.0, ..cfg };
        let adv = pgd_attack(&m, &x, Label(1), &big).unwrap();
        assert!((adv[0] - 0.1).abs() < 1e-15 && (adv[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn targeted_mode_descends_target_loss() {
        let m = logistic(&[1.0, 1.0], 0.0);
        let x = fv(&[0.3, 0.3]);
        let cfg = PgdConfig {
            epsilon: 1.0,
            step_size: 0.1,
            num_steps: 20,
            random_start: false,
            clip_bounds: None,
            seed: 0,
            target: Some(Label(0)),
        };
        let adv = pgd_attack(&m, &x, Label(1), &cfg).unwrap();
        assert_eq!(m.classify_one(&adv).unwrap(), Label(0));
    }

    #[test]
    fn clip_bounds_and_start_checks() {
        let m = MlpModel::new(&[2, 4, 2], 3).unwrap();
        let cfg = PgdConfig {
            clip_bounds: Some((0.0, 1.0)),
            ..PgdConfig::with_epsilon(0.3)
        };
        let adv = pgd_attack(&m, &fv(&[0.0, 1.0]), Label(0), &cfg).unwrap();
        assert!(adv.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(pgd_attack(&m, &fv(&[1.5, 0.5]), Label(0), &cfg).is_err());
        assert!(pgd_attack(&m, &fv(&[0.5, 0.5]), Label(7), &cfg).is_err());
    }

    #[test]
    fn sweep_rejects_unsorted_and_unlabeled() {
        let m = MlpModel::new(&[2, 4, 2], 3).unwrap();
        let data = crate::data::make_blobs(2, 5, &crate::data::Centers::Auto { dim: 2 }, 0.3, 0).unwrap();
        let est = SweepEstimator::Nhc(NoiseSpec::default());
        let pgd = PgdConfig::with_epsilon(0.0);
        assert!(epsilon_sweep(&m, &data, &[0.2, 0.1], &est, &pgd).is_err());
        let ood = crate::data::make_ood(5, &data, 0.5, 1).unwrap();
        assert!(epsilon_sweep(&m, &ood, &[0.0], &est, &pgd).is_err());
    }

    #[test]
    fn grid_matches_declared_default() {
        let g = default_epsilon_grid(1.0);
        assert_eq!(g.len(), 11);
        let decimals = [0.0, 0.025, 0.05, 0.075, 0.1, 0.125, 0.15, 0.175, 0.2, 0.225, 0.25];
        assert_eq!(g, decimals);
        assert_eq!(default_epsilon_grid(8.0)[3], 0.6);
    }

    proptest! {
        #[test]
        fn budget_and_bounds_hold(seed in 0u64..200, eps in 0.0f64..0.6, x0 in 0.0f64..1.0, x1 in 0.0f64..1.0, x2 in 0.0f64..1.0, steps in 1usize..15, clip in any::<bool>()) {
            let m = MlpModel::new(&[3, 6, 3], seed).unwrap();
            let x = fv(&[x0, x1, x2]);
            let cfg = PgdConfig {
                num_steps: steps,
                seed,
                clip_bounds: clip.then_some((0.0, 1.0)),
                ..PgdConfig::with_epsilon(eps)
            }.rescaled(eps);
            let label = Label(seed as usize % 3);
            let adv = pgd_attack(&m, &x, label, &cfg).unwrap();
            prop_assert!(adv.linf_distance(&x) <= eps + 1e-9);
            if clip {
                prop_assert!(adv.iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
    }
}
