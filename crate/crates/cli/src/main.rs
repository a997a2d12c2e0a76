//! `nhc`: train the desk-scale classifier, generate data regimes, score
//! datasets with NHC or ABC, run PGD sweeps and config-driven experiments.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nhc_core::eval::ExportFormat;
use nhc_core::NoiseDistribution;

mod commands;
mod output;

#[derive(Parser, Debug)]
#[command(name = "nhc", version, about = "Neighborhood confidence for black-box classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train an MLP on a labeled dataset and write a checkpoint
    Train(TrainArgs),
    /// Generate an in-domain, shifted or out-of-domain dataset
    GenData(GenDataArgs),
    /// Score a dataset with neighborhood confidence
    NhcEval(NhcEvalArgs),
    /// Score a dataset with the attribution-based baseline
    AbcEval(AbcEvalArgs),
    /// Attack a labeled dataset over an epsilon grid and score the results
    AttackSweep(AttackSweepArgs),
    /// Run an experiment config and export every protocol's results
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output directory
    #[arg(long)]
    out: PathBuf,

    /// Export format
    #[arg(long, default_value = "csv")]
    format: ExportFormat,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Labeled dataset CSV
    #[arg(long)]
    data: PathBuf,

    /// Checkpoint path to write
    #[arg(long)]
    out: PathBuf,

    /// Hidden layer widths, comma separated
    #[arg(long, value_delimiter = ',', default_value = "16,16")]
    hidden: Vec<usize>,

    #[arg(long, default_value_t = 0.1)]
    lr: f64,

    #[arg(long, default_value_t = 50)]
    epochs: usize,

    #[arg(long, default_value_t = 32)]
    batch_size: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Blobs,
    Glyphs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum RegimeArg {
    InDomain,
    Shifted,
    Ood,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Split {
    /// Every generated sample
    All,
    /// Even-indexed samples
    Train,
    /// Odd-indexed samples
    Test,
}

#[derive(Args, Debug)]
struct GenDataArgs {
    /// Dataset CSV to write
    #[arg(long)]
    out: PathBuf,

    #[arg(long, value_enum, default_value = "blobs")]
    kind: Kind,

    #[arg(long, value_enum, default_value = "in-domain")]
    regime: RegimeArg,

    /// Which half of the generated samples to keep. Both halves of one seed
    /// share class centers and glyph templates.
    #[arg(long, value_enum, default_value = "all")]
    split: Split,

    #[arg(long, default_value_t = 3)]
    num_classes: usize,

    #[arg(long, default_value_t = 200)]
    per_class: usize,

    /// Feature dimension (blobs)
    #[arg(long, default_value_t = 2)]
    dim: usize,

    /// Per-class spread (blobs)
    #[arg(long, default_value_t = 0.5)]
    std: f64,

    /// Glyph side length in pixels
    #[arg(long, default_value_t = 8)]
    side: usize,

    /// Per-pixel jitter (glyphs)
    #[arg(long, default_value_t = 0.15)]
    jitter: f64,

    /// Shift rotation in degrees; any shift flag replaces the default profile
    #[arg(long)]
    rotation: Option<f64>,

    /// Shift translation, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    translate: Option<Vec<f64>>,

    #[arg(long)]
    scale: Option<f64>,

    #[arg(long)]
    noise_std: Option<f64>,

    /// Number of out-of-domain points
    #[arg(long, default_value_t = 300)]
    ood_points: usize,

    /// Minimum distance of out-of-domain points from every class center
    #[arg(long, default_value_t = 1.5)]
    min_distance: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct NoiseArgs {
    /// Perturbed copies per point
    #[arg(long = "n-samples", default_value_t = nhc_core::nhc::DEFAULT_NUM_SAMPLES)]
    n_samples: usize,

    /// Perturbation strength; repeat for several
    #[arg(long = "strength", default_values_t = [nhc_core::nhc::DEFAULT_STRENGTH])]
    strengths: Vec<f64>,

    #[arg(long, default_value = "rademacher")]
    distribution: NoiseDistribution,

    /// Count this class instead of the prediction at each point
    #[arg(long)]
    reference_class: Option<usize>,

    /// Do not clamp perturbations to the data's bounds (image data only)
    #[arg(long)]
    no_clip: bool,
}

#[derive(Args, Debug)]
struct NhcEvalArgs {
    #[arg(long)]
    model: PathBuf,

    #[arg(long)]
    data: PathBuf,

    #[command(flatten)]
    noise: NoiseArgs,

    /// Confidence thresholds for the accuracy curve, comma separated
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<f64>>,

    #[command(flatten)]
    output: OutputArgs,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct AbcEvalArgs {
    #[arg(long)]
    model: PathBuf,

    #[arg(long)]
    data: PathBuf,

    /// Mutated copies per point
    #[arg(long = "n-samples", default_value_t = nhc_core::nhc::DEFAULT_NUM_SAMPLES)]
    n_samples: usize,

    /// Step applied to the selected feature on unbounded data
    #[arg(long, default_value_t = nhc_core::nhc::DEFAULT_STRENGTH)]
    step: f64,

    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<f64>>,

    #[command(flatten)]
    output: OutputArgs,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum EstimatorArg {
    Nhc,
    Abc,
}

#[derive(Args, Debug)]
struct AttackSweepArgs {
    #[arg(long)]
    model: PathBuf,

    /// Labeled dataset to attack
    #[arg(long)]
    data: PathBuf,

    /// Estimators to score attacked points with; repeatable
    #[arg(long = "estimator", value_enum, default_values_t = [EstimatorArg::Nhc])]
    estimators: Vec<EstimatorArg>,

    #[command(flatten)]
    noise: NoiseArgs,

    /// Explicit epsilon grid, comma separated
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,

    /// Multiplier on the default grid 0, 0.025, .., 0.25
    #[arg(long, default_value_t = 1.0)]
    epsilon_scale: f64,

    #[arg(long, default_value_t = nhc_core::attack::DEFAULT_PGD_STEPS)]
    steps: usize,

    #[arg(long)]
    no_random_start: bool,

    /// Attack only the first points of the dataset
    #[arg(long)]
    max_points: Option<usize>,

    #[command(flatten)]
    output: OutputArgs,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Experiment config (JSON)
    #[arg(long)]
    config: PathBuf,

    /// Output directory
    #[arg(long)]
    out: PathBuf,

    /// Override the config's export format
    #[arg(long)]
    format: Option<ExportFormat>,

    /// Override the config's seed
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train(args) => commands::train(args),
        Command::GenData(args) => commands::gen_data(args),
        Command::NhcEval(args) => commands::nhc_eval(args),
        Command::AbcEval(args) => commands::abc_eval(args),
        Command::AttackSweep(args) => commands::attack_sweep(args),
        Command::Report(args) => commands::report(args),
    }
}
