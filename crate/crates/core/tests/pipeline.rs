use nhc_core::attack::{attack_all, default_epsilon_grid, SweepEstimator};
use nhc_core::eval::{export_results, DataConfig, EstimatorConfig, ExportFormat, ModelConfig, Protocol};
use nhc_core::nhc::nhc_at;
use nhc_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn two_blobs() -> (MlpModel, LabeledDataset) {
    let data = make_blobs(2, 200, &Centers::Auto { dim: 2 }, 0.5, 4).unwrap();
    let init = MlpModel::new(&[2, 8, 2], 4).unwrap();
    let model = train_sgd(&init, &data, &TrainConfig::default()).unwrap().model;
    (model, data)
}

fn accuracy(model: &MlpModel, points: &[FeatureVector], labels: &[Label]) -> f64 {
    let preds = model.classify(points).unwrap();
    preds.iter().zip(labels).filter(|(p, t)| p == t).count() as f64 / labels.len() as f64
}

fn mean(scores: &[ConfidenceScore]) -> f64 {
    scores.iter().map(|s| s.value()).sum::<f64>() / scores.len() as f64
}

fn small_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        seed,
        model: ModelConfig {
            epochs: 20,
            ..ModelConfig::default()
        },
        data: DataConfig {
            per_class: 40,
            ood_points: 40,
            ..DataConfig::default()
        },
        estimators: vec![EstimatorConfig::nhc(0.4), EstimatorConfig::abc()],
        protocol: vec![Protocol::Shift, Protocol::Ood, Protocol::Adv],
        attack: nhc_core::eval::AttackConfig {
            epsilon_scale: 8.0,
            max_points: Some(20),
            ..Default::default()
        },
        export: Default::default(),
    }
}

#[test]
fn monte_carlo_matches_enumeration_in_six_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let model = MlpModel::new(&[6, 10, 3], 8).unwrap();
    for i in 0..20 {
        let x = FeatureVector::new((0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let p = nhc_exact_rademacher(&model, &x, 0.8).unwrap();
        let mc = nhc_at(&model, &x, &NoiseSpec::new(0.8, 5000, 6).unwrap(), i)
            .unwrap()
            .value();
        assert!(
            (mc - p).abs() <= 3.0 * (p * (1.0 - p) / 5000.0).sqrt() + 1e-12,
            "point {i}: {mc} vs {p}"
        );
    }
}

#[test]
fn checkpoint_round_trip_keeps_predictions() {
    let (model, data) = two_blobs();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_checkpoint(&model, &path).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    assert_eq!(loaded, model);
    assert_eq!(
        loaded.classify(data.points()).unwrap(),
        model.classify(data.points()).unwrap()
    );
}

#[test]
fn dataset_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let glyphs = make_glyphs(3, 5, 4, 0.1, 2).unwrap();
    let ood = make_ood(10, &glyphs, 0.5, 2).unwrap();
    for data in [glyphs, ood] {
        let path = dir.path().join(format!("{}.csv", data.regime().as_str()));
        save_dataset(&data, &path).unwrap();
        assert_eq!(load_dataset(&path).unwrap(), data);
    }
}

#[test]
fn far_translation_lowers_accuracy() {
    let data = make_blobs(3, 100, &Centers::Auto { dim: 2 }, 0.5, 5).unwrap();
    let init = MlpModel::new(&[2, 16, 3], 5).unwrap();
    let model = train_sgd(&init, &data, &TrainConfig::default()).unwrap().model;
    let shifted = apply_shift(
        &data,
        &ShiftConfig {
            translate: vec![10.0, 10.0],
            ..ShiftConfig::identity(1)
        },
    )
    .unwrap();
    let labels = data.labels().unwrap();
    assert!(accuracy(&model, shifted.points(), labels) < accuracy(&model, data.points(), labels));
}

#[test]
fn pgd_at_three_tenths_of_the_gap_causes_errors() {
    let (model, data) = two_blobs();
    let centers = data.class_centers();
    let gap = centers[0]
        .iter()
        .zip(&centers[1])
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let labels = data.labels().unwrap();
    let clean = 1.0 - accuracy(&model, data.points(), labels);
    let attacked = attack_all(&model, data.points(), labels, &PgdConfig::with_epsilon(0.3 * gap)).unwrap();
    assert!(1.0 - accuracy(&model, &attacked, labels) > clean);
}

#[test]
fn abc_drops_on_attacked_points() {
    let (model, data) = two_blobs();
    let labels = data.labels().unwrap();
    // Knee: the smallest grid budget that flips at least a third of the points.
    let eps = default_epsilon_grid(16.0)
        .into_iter()
        .find(|&e| {
            let adv = attack_all(&model, data.points(), labels, &PgdConfig::with_epsilon(e)).unwrap();
            accuracy(&model, &adv, labels) <= 2.0 / 3.0
        })
        .unwrap();
    let attacked = attack_all(&model, data.points(), labels, &PgdConfig::with_epsilon(eps)).unwrap();
    let cfg = AbcConfig::for_layout(data.layout(), 7, 3, 0.4);
    let clean = mean(&abc_batch(&model, data.points(), &cfg).unwrap());
    let adv = mean(&abc_batch(&model, &attacked, &cfg).unwrap());
    assert!(adv < clean, "abc {adv} on attacked vs {clean} clean at epsilon {eps}");
}

#[test]
fn attack_accuracy_is_non_increasing_in_budget() {
    let (model, data) = two_blobs();
    let est = SweepEstimator::Nhc(NoiseSpec::default());
    let rows = epsilon_sweep(
        &model,
        &data,
        &default_epsilon_grid(16.0),
        &est,
        &PgdConfig::with_epsilon(0.0),
    )
    .unwrap();
    let violations = rows.windows(2).filter(|w| w[1].accuracy > w[0].accuracy).count();
    assert!(
        violations <= rows.len() / 10,
        "{violations} increases over {} grid points",
        rows.len()
    );
    assert!(rows.last().unwrap().accuracy < rows[0].accuracy);
}

#[test]
fn sweep_with_zero_only_matches_clean_mean() {
    let (model, data) = two_blobs();
    let spec = NoiseSpec::default();
    let rows = epsilon_sweep(
        &model,
        &data,
        &[0.0],
        &SweepEstimator::Nhc(spec),
        &PgdConfig::with_epsilon(0.0),
    )
    .unwrap();
    assert_eq!(
        rows[0].mean_confidence,
        mean(&nhc_batch(&model, data.points(), &spec).unwrap())
    );
}

#[test]
fn ood_first_quartile_sits_below_in_domain() {
    let mut config = small_config(2);
    config.protocol = vec![Protocol::Ood];
    config.estimators = vec![EstimatorConfig::nhc(0.4)];
    let bundle = run_experiment(&config).unwrap();
    let find = |r: Regime| bundle.cdfs.iter().find(|c| c.regime == r).unwrap();
    assert!(find(Regime::Ood).cdf.quantile(0.25) < find(Regime::InDomain).cdf.quantile(0.25));
}

#[test]
fn adv_protocol_reports_a_table_per_variant() {
    let config = small_config(3);
    let bundle = run_experiment(&config).unwrap();
    assert_eq!(bundle.sweeps.len(), 2);
    for sweep in &bundle.sweeps {
        assert_eq!(sweep.rows.len(), 11);
        assert_eq!(sweep.rows[0].epsilon, 0.0);
    }
    assert_eq!(bundle.sweeps[0].rows[0].strength, Some(0.4));
    assert_eq!(bundle.sweeps[1].rows[0].strength, None);
}

#[test]
fn json_export_parses_back_to_the_bundle() {
    let bundle = run_experiment(&small_config(4)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = export_results(&bundle, dir.path(), ExportFormat::Json).unwrap();
    let parsed: ResultBundle = serde_json::from_str(&std::fs::read_to_string(&files[0]).unwrap()).unwrap();
    assert_eq!(parsed, bundle);
}

#[test]
fn seeded_run_matches_golden_files() {
    let golden = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let bundle = run_experiment(&small_config(5)).unwrap();
    if std::env::var_os("NHC_UPDATE_GOLDEN").is_some() {
        export_results(&bundle, &golden, ExportFormat::Csv).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let files = export_results(&bundle, dir.path(), ExportFormat::Csv).unwrap();
    for file in files {
        let name = file.file_name().unwrap();
        let expected =
            std::fs::read_to_string(golden.join(name)).unwrap_or_else(|e| panic!("missing golden file {name:?}: {e}"));
        assert_eq!(std::fs::read_to_string(&file).unwrap(), expected, "{name:?}");
    }
}
