use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::mlp::{MlpModel, ParamGrads};
use super::{check_dims, BlackBoxClassifier};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::{stream, StreamTag};

/// Minibatch SGD settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.1,
            epochs: 50,
            batch_size: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: MlpModel,
    /// Mean cross-entropy of each epoch, measured on the minibatches as they
    /// were visited (before each update).
    pub loss_trace: Vec<f64>,
}

/// Trains a copy of `model` on `data` with plain minibatch SGD.
pub fn train_sgd(model: &MlpModel, data: &LabeledDataset, config: &TrainConfig) -> Result<TrainReport> {
    let labels = data
        .labels()
        .ok_or_else(|| Error::param("data", "training data must be labeled"))?;
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    if !(config.lr >= 0.0 && config.lr.is_finite()) {
        return Err(Error::param("lr", "must be finite and non-negative"));
    }
    if config.batch_size == 0 {
        return Err(Error::param("batch_size", "must be positive"));
    }
    check_dims(data.points(), model.input_dim())?;
    for l in labels {
        l.checked(model.num_classes())?;
    }

    let mut model = model.clone();
    let mut rng = stream(config.seed, StreamTag::Shuffle, &[]);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs);
    let points = data.points();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let mut grads = ParamGrads::zeros(&model);
            for &i in chunk {
                epoch_loss += model.accumulate_loss_grad(&points[i], labels[i], &mut grads);
            }
            model.apply_update(&grads, config.lr / chunk.len() as f64);
        }
        let mean = epoch_loss / data.len() as f64;
        if !mean.is_finite() || !model.is_finite() {
            return Err(Error::Diverged { epoch, loss: mean });
        }
        loss_trace.push(mean);
    }
    Ok(TrainReport { model, loss_trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{cross_entropy, FeatureVector, Label, WhiteBoxClassifier};
    use crate::data::{make_blobs, Centers};

    fn two_blobs() -> LabeledDataset {
        make_blobs(
            2,
            100,
            &Centers::Explicit(vec![vec![-2.0, 0.0], vec![2.0, 0.0]]),
            0.5,
            3,
        )
        .unwrap()
    }

    fn accuracy(model: &MlpModel, data: &LabeledDataset) -> f64 {
        let preds = model.classify(data.points()).unwrap();
        let labels = data.labels().unwrap();
        preds.iter().zip(labels).filter(|(p, t)| p == t).count() as f64 / labels.len() as f64
    }

    #[test]
    fn separable_blobs_are_learned() {
        let data = two_blobs();
        let init = MlpModel::new(&[2, 8, 2], 1).unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            ..TrainConfig::default()
        };
        let report = train_sgd(&init, &data, &cfg).unwrap();
        assert_eq!(report.loss_trace.len(), 50);
        assert!(accuracy(&report.model, &data) >= 0.99);
        assert!(report.loss_trace.last().unwrap() < &report.loss_trace[0]);
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let data = two_blobs();
        let init = MlpModel::new(&[2, 8, 2], 1).unwrap();
        let cfg = TrainConfig {
            lr: 0.0,
            epochs: 3,
            ..TrainConfig::default()
        };
        let report = train_sgd(&init, &data, &cfg).unwrap();
        assert_eq!(report.model, init);
    }

    #[test]
    fn single_point_overfits() {
        let x = FeatureVector::new(vec![0.3, -0.7]).unwrap();
        let data = LabeledDataset::labeled(vec![x.clone()], vec![Label(1)], 3).unwrap();
        let init = MlpModel::new(&[2, 8, 3], 5).unwrap();
        let cfg = TrainConfig {
            lr: 0.5,
            epochs: 200,
            batch_size: 1,
            seed: 0,
        };
        let report = train_sgd(&init, &data, &cfg).unwrap();
        let logits = report.model.logits(&[x]).unwrap();
        assert!(cross_entropy(&logits[0], Label(1)) < 0.01);
    }

    #[test]
    fn seeded_training_is_bit_reproducible() {
        let data = two_blobs();
        let init = MlpModel::new(&[2, 6, 2], 9).unwrap();
        let cfg = TrainConfig {
            epochs: 10,
            seed: 77,
            ..TrainConfig::default()
        };
        let a = train_sgd(&init, &data, &cfg).unwrap();
        let b = train_sgd(&init, &data, &cfg).unwrap();
        assert_eq!(a.loss_trace, b.loss_trace);
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn divergence_is_reported() {
        let data = two_blobs();
        let init = MlpModel::new(&[2, 8, 2], 1).unwrap();
        let cfg = TrainConfig {
            lr: 1e300,
            epochs: 5,
            ..TrainConfig::default()
        };
        assert!(matches!(train_sgd(&init, &data, &cfg), Err(Error::Diverged { .. })));
    }

    #[test]
    fn rejects_out_of_range_labels() {
        let x = FeatureVector::new(vec![0.0, 0.0]).unwrap();
        let data = LabeledDataset::labeled(vec![x], vec![Label(4)], 5).unwrap();
        let init = MlpModel::new(&[2, 3, 2], 0).unwrap();
        assert!(train_sgd(&init, &data, &TrainConfig::default()).is_err());
    }
}
