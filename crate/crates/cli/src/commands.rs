use anyhow::{bail, Context, Result};
use nhc_core::attack::{default_epsilon_grid, SweepEstimator};
use nhc_core::eval::default_thresholds;
use nhc_core::*;

use crate::output::{mean, write_eval, write_sweep, Variant};
use crate::{
    AbcEvalArgs, AttackSweepArgs, EstimatorArg, GenDataArgs, Kind, NhcEvalArgs, NoiseArgs, RegimeArg, ReportArgs,
    Split, TrainArgs,
};

fn load_model(path: &std::path::Path) -> Result<MlpModel> {
    load_checkpoint(path).with_context(|| format!("cannot load model {}", path.display()))
}

fn load_data(path: &std::path::Path, model: &MlpModel) -> Result<LabeledDataset> {
    let data = load_dataset(path).with_context(|| format!("cannot load dataset {}", path.display()))?;
    if data.dim() != Some(model.input_dim()) {
        bail!(
            "dataset {} has dimension {:?}, model expects {}",
            path.display(),
            data.dim(),
            model.input_dim()
        );
    }
    Ok(data)
}

fn accuracy(model: &MlpModel, data: &LabeledDataset) -> Result<Option<f64>> {
    let Some(labels) = data.labels() else {
        return Ok(None);
    };
    let preds = model.classify(data.points())?;
    Ok(Some(
        preds.iter().zip(labels).filter(|(p, t)| p == t).count() as f64 / labels.len() as f64,
    ))
}

pub fn train(args: TrainArgs) -> Result<()> {
    let data = load_dataset(&args.data).with_context(|| format!("cannot load dataset {}", args.data.display()))?;
    let dim = data.dim().context("training set is empty")?;
    let dims: Vec<usize> = std::iter::once(dim)
        .chain(args.hidden.iter().copied())
        .chain(std::iter::once(data.num_classes()))
        .collect();
    let init = MlpModel::new(&dims, args.seed)?;
    let cfg = TrainConfig {
        lr: args.lr,
        epochs: args.epochs,
        batch_size: args.batch_size,
        seed: args.seed,
    };
    let report = train_sgd(&init, &data, &cfg).context("training failed")?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    save_checkpoint(&report.model, &args.out)?;
    println!("layers={:?}", report.model.layer_dims());
    if let Some(loss) = report.loss_trace.last() {
        println!("final_loss={loss}");
    }
    if let Some(acc) = accuracy(&report.model, &data)? {
        println!("train_accuracy={acc}");
    }
    println!("model_digest={:016x}", report.model.digest());
    Ok(())
}

pub fn gen_data(args: GenDataArgs) -> Result<()> {
    let full = match args.kind {
        Kind::Blobs => make_blobs(
            args.num_classes,
            args.per_class,
            &Centers::Auto { dim: args.dim },
            args.std,
            args.seed,
        )?,
        Kind::Glyphs => make_glyphs(args.num_classes, args.per_class, args.side, args.jitter, args.seed)?,
    };
    let base = match args.split {
        Split::All => full,
        Split::Train => interleaved_split(&full)?.0,
        Split::Test => interleaved_split(&full)?.1,
    };
    let data = match args.regime {
        RegimeArg::InDomain => base,
        RegimeArg::Shifted => {
            let custom =
                args.rotation.is_some() || args.translate.is_some() || args.scale.is_some() || args.noise_std.is_some();
            let cfg = if custom {
                let identity = ShiftConfig::identity(args.seed);
                ShiftConfig {
                    rotation_deg: args.rotation.unwrap_or(identity.rotation_deg),
                    translate: args.translate.clone().unwrap_or(identity.translate),
                    scale: args.scale.unwrap_or(identity.scale),
                    additive_noise_std: args.noise_std.unwrap_or(identity.additive_noise_std),
                    seed: args.seed,
                }
            } else {
                ShiftConfig::default_profile(&base, args.seed)
            };
            apply_shift(&base, &cfg)?
        }
        RegimeArg::Ood => make_ood(args.ood_points, &base, args.min_distance, args.seed)?,
    };
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    save_dataset(&data, &args.out)?;
    println!(
        "wrote {} {} points (dim {}) to {}",
        data.len(),
        data.regime().as_str(),
        data.dim().unwrap_or(0),
        args.out.display()
    );
    Ok(())
}

fn noise_spec(noise: &NoiseArgs, data: &LabeledDataset, seed: u64) -> Result<NoiseSpec> {
    let clip = if noise.no_clip {
        None
    } else {
        data.layout().clip_bounds()
    };
    let strength = *noise.strengths.first().context("at least one --strength is required")?;
    Ok(NoiseSpec::new(strength, noise.n_samples, seed)?
        .with_distribution(noise.distribution)
        .with_clip(clip))
}

fn nhc_variant_name(strength: f64, noise: &NoiseArgs) -> String {
    let mut name = format!("nhc_l{strength}");
    if noise.distribution != NoiseDistribution::Rademacher {
        name = format!("{name}_{}", noise.distribution.as_str());
    }
    if let Some(r) = noise.reference_class {
        name = format!("{name}_ref{r}");
    }
    name
}

fn summarize(variants: &[Variant], acc: Option<f64>, files: &[std::path::PathBuf]) {
    if let Some(acc) = acc {
        println!("accuracy={acc}");
    }
    for v in variants {
        println!("{} mean_confidence={}", v.name, mean(&v.scores));
    }
    for f in files {
        println!("wrote {}", f.display());
    }
}

pub fn nhc_eval(args: NhcEvalArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let data = load_data(&args.data, &model)?;
    let spec = noise_spec(&args.noise, &data, args.seed)?;
    let reference = args.noise.reference_class.map(Label);
    let grid = nhc_strength_sweep(&model, data.points(), &args.noise.strengths, &spec, reference)?;
    let variants: Vec<Variant> = args
        .noise
        .strengths
        .iter()
        .zip(grid)
        .map(|(&s, scores)| Variant {
            name: nhc_variant_name(s, &args.noise),
            estimator: "nhc",
            strength: Some(s),
            scores,
        })
        .collect();
    let preds = model.classify(data.points())?;
    let thresholds = args.thresholds.unwrap_or_else(default_thresholds);
    let files = write_eval(&args.output, &data, &preds, &variants, &thresholds)?;
    summarize(&variants, accuracy(&model, &data)?, &files);
    Ok(())
}

pub fn abc_eval(args: AbcEvalArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let data = load_data(&args.data, &model)?;
    let cfg = AbcConfig::for_layout(data.layout(), args.n_samples, args.seed, args.step);
    let variants = vec![Variant {
        name: "abc".into(),
        estimator: "abc",
        strength: None,
        scores: abc_batch(&model, data.points(), &cfg)?,
    }];
    let preds = model.classify(data.points())?;
    let thresholds = args.thresholds.unwrap_or_else(default_thresholds);
    let files = write_eval(&args.output, &data, &preds, &variants, &thresholds)?;
    summarize(&variants, accuracy(&model, &data)?, &files);
    Ok(())
}

pub fn attack_sweep(args: AttackSweepArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let mut data = load_data(&args.data, &model)?;
    let Some(labels) = data.labels() else {
        bail!(
            "attack-sweep needs a labeled dataset; {} has no labels",
            args.data.display()
        );
    };
    if let Some(k) = args.max_points.filter(|&k| k < data.len()) {
        data = LabeledDataset::from_parts(
            data.points()[..k].to_vec(),
            Some(labels[..k].to_vec()),
            data.num_classes(),
            data.regime(),
            data.layout(),
        )?;
    }
    let epsilons = args
        .epsilons
        .clone()
        .unwrap_or_else(|| default_epsilon_grid(args.epsilon_scale));
    let spec = noise_spec(&args.noise, &data, args.seed)?;
    let mut estimators = Vec::new();
    for e in &args.estimators {
        match e {
            EstimatorArg::Nhc => {
                for &s in &args.noise.strengths {
                    let spec = spec.with_strength(s);
                    estimators.push(match args.noise.reference_class {
                        Some(r) => SweepEstimator::NhcRef {
                            spec,
                            reference: Label(r),
                        },
                        None => SweepEstimator::Nhc(spec),
                    });
                }
            }
            EstimatorArg::Abc => estimators.push(SweepEstimator::Abc(AbcConfig::for_layout(
                data.layout(),
                args.noise.n_samples,
                args.seed,
                spec.strength,
            ))),
        }
    }
    let pgd = PgdConfig {
        num_steps: args.steps,
        random_start: !args.no_random_start,
        clip_bounds: data.layout().clip_bounds(),
        seed: args.seed,
        ..PgdConfig::with_epsilon(0.0)
    };
    let mut rows = Vec::new();
    for est in &estimators {
        rows.extend(epsilon_sweep(&model, &data, &epsilons, est, &pgd)?);
    }
    for r in &rows {
        println!(
            "{} strength={} epsilon={} mean_confidence={} accuracy={}",
            r.estimator,
            r.strength.map(|s| s.to_string()).unwrap_or_else(|| "-".into()),
            r.epsilon,
            r.mean_confidence,
            r.accuracy
        );
    }
    let path = write_sweep(&args.output, &rows)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn report(args: ReportArgs) -> Result<()> {
    let mut config = ExperimentConfig::from_path(&args.config)
        .with_context(|| format!("invalid experiment config {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let format = args.format.unwrap_or(config.export.format);
    let bundle = run_experiment(&config)?;
    for (set, acc) in &bundle.metadata.accuracy {
        println!("accuracy[{set}]={acc}");
    }
    println!("model_digest={}", bundle.metadata.model_digest);
    for path in bundle.export(&args.out, format)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
