//! Neighborhood confidence (NHC) for top-1 black-box classifiers.
//!
//! The score of an input is the fraction of randomly perturbed copies that
//! keep the original top-1 label. It needs nothing but label queries, so it
//! applies to any [`BlackBoxClassifier`].
//!
//! Alongside the estimator the crate carries a small rig for studying it: a
//! seeded MLP ([`MlpModel`]), synthetic data regimes, an attribution-based
//! baseline ([`abc`]), PGD attacks ([`attack`]) and evaluation lenses
//! ([`eval`]).
//!
//! ```
//! use nhc_core::{make_blobs, nhc, Centers, MlpModel, NoiseSpec, TrainConfig};
//!
//! let data = make_blobs(3, 50, &Centers::Auto { dim: 2 }, 0.4, 1).unwrap();
//! let init = MlpModel::new(&[2, 16, 3], 1).unwrap();
//! let model = nhc_core::train_sgd(&init, &data, &TrainConfig::default()).unwrap().model;
//! let score = nhc(&model, &data.points()[0], &NoiseSpec::default()).unwrap();
//! assert!((0.0..=1.0).contains(&score.value()));
//! ```

pub mod abc;
pub mod attack;
pub mod classifier;
pub mod data;
pub mod error;
pub mod eval;
pub mod nhc;
pub mod rng;

pub use abc::{abc_batch, abc_score, attribution_single_pass, AbcConfig, AttributionMap, Mutation};
pub use attack::{epsilon_sweep, pgd_attack, PgdConfig, SweepEstimator, SweepRow};
pub use classifier::{
    grad_check, load_checkpoint, save_checkpoint, train_sgd, BlackBoxClassifier, FeatureVector, Label, MlpModel,
    Objective, TrainConfig, TrainReport, WhiteBoxClassifier,
};
pub use data::{
    apply_shift, interleaved_split, load_dataset, make_blobs, make_glyphs, make_ood, save_dataset, Centers,
    LabeledDataset, Layout, Regime, ShiftConfig,
};
pub use error::{Error, Result};
pub use eval::{empirical_cdf, run_experiment, threshold_accuracy_curve, ExperimentConfig, ResultBundle};
pub use nhc::{
    nhc, nhc_batch, nhc_exact_rademacher, nhc_multi_strength, nhc_reference_class, nhc_strength_sweep, ConfidenceScore,
    EstimatorKind, NoiseDistribution, NoiseSpec,
};
