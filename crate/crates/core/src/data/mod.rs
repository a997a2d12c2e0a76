//! Synthetic data in three regimes: in-domain, shifted, and out-of-domain.
//!
//! Two layouts share one dataset type. `Plane` data are points in R^D whose
//! first two coordinates carry the geometry (blobs on a circle), handy for
//! analytic oracles. `Image` data are small row-major bitmaps in [0, 1] built
//! from per-class glyph templates.

mod io;

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::classifier::{FeatureVector, Label};
use crate::error::{Error, Result};
use crate::rng::{stream, StreamTag};

pub use io::{load_dataset, read_dataset, save_dataset, write_dataset};

/// Radius of the circle that auto-placed blob centers sit on.
pub const AUTO_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    InDomain,
    Shifted,
    Ood,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::InDomain => "in_domain",
            Regime::Shifted => "shifted",
            Regime::Ood => "ood",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "in_domain" => Some(Regime::InDomain),
            "shifted" => Some(Regime::Shifted),
            "ood" => Some(Regime::Ood),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    Plane,
    Image { width: usize, height: usize },
}

impl Layout {
    /// Natural element-wise bounds of the features, if any.
    pub fn clip_bounds(self) -> Option<(f64, f64)> {
        match self {
            Layout::Plane => None,
            Layout::Image { .. } => Some((0.0, 1.0)),
        }
    }
}

/// Points with optional ground truth. Out-of-domain sets carry no labels:
/// no prediction on them can be correct.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    points: Vec<FeatureVector>,
    labels: Option<Vec<Label>>,
    num_classes: usize,
    regime: Regime,
    layout: Layout,
}

impl LabeledDataset {
    /// An in-domain plane dataset from explicit points and labels.
    pub fn labeled(points: Vec<FeatureVector>, labels: Vec<Label>, num_classes: usize) -> Result<Self> {
        Self::from_parts(points, Some(labels), num_classes, Regime::InDomain, Layout::Plane)
    }

    pub fn from_parts(
        points: Vec<FeatureVector>,
        labels: Option<Vec<Label>>,
        num_classes: usize,
        regime: Regime,
        layout: Layout,
    ) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::param("num_classes", "must be positive"));
        }
        if let Some(first) = points.first() {
            crate::classifier::check_dims(&points, first.dim())?;
            if let Layout::Image { width, height } = layout {
                if width * height != first.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: width * height,
                        found: first.dim(),
                    });
                }
            }
        }
        match (&labels, regime) {
            (Some(_), Regime::Ood) => return Err(Error::param("labels", "out-of-domain data cannot carry labels")),
            (None, Regime::InDomain | Regime::Shifted) => {
                return Err(Error::param("labels", "in-domain and shifted data need labels"))
            }
            (Some(ls), _) => {
                if ls.len() != points.len() {
                    return Err(Error::LengthMismatch {
                        what: "points vs labels",
                        left: points.len(),
                        right: ls.len(),
                    });
                }
                for l in ls {
                    l.checked(num_classes)?;
                }
            }
            (None, Regime::Ood) => {}
        }
        Ok(Self {
            points,
            labels,
            num_classes,
            regime,
            layout,
        })
    }

    pub fn points(&self) -> &[FeatureVector] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Feature dimension, or `None` for an empty set.
    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(|p| p.dim())
    }

    /// Per-class mean of the points. Classes without points are skipped.
    pub fn class_centers(&self) -> Vec<Vec<f64>> {
        let (Some(labels), Some(dim)) = (self.labels(), self.dim()) else {
            return Vec::new();
        };
        let mut sums = vec![vec![0.0; dim]; self.num_classes];
        let mut counts = vec![0usize; self.num_classes];
        for (p, l) in self.points.iter().zip(labels) {
            counts[l.0] += 1;
            sums[l.0].iter_mut().zip(p.values()).for_each(|(s, v)| *s += v);
        }
        sums.into_iter()
            .zip(counts)
            .filter(|(_, c)| *c > 0)
            .map(|(s, c)| s.into_iter().map(|v| v / c as f64).collect())
            .collect()
    }

    /// Pooled per-feature standard deviation.
    pub fn feature_std(&self) -> f64 {
        let Some(dim) = self.dim() else { return 0.0 };
        let n = self.len() as f64;
        let mut var_sum = 0.0;
        for j in 0..dim {
            let mean = self.points.iter().map(|p| p[j]).sum::<f64>() / n;
            var_sum += self.points.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / n;
        }
        (var_sum / dim as f64).sqrt()
    }
}

/// Where blob centers come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centers {
    /// Evenly spaced on a circle of radius [`AUTO_RADIUS`] in the first two
    /// coordinates (on a line for `dim == 1`).
    Auto {
        dim: usize,
    },
    Explicit(Vec<Vec<f64>>),
}

impl Centers {
    pub fn resolve(&self, num_classes: usize) -> Result<Vec<Vec<f64>>> {
        match self {
            Centers::Auto { dim: 0 } => Err(Error::param("centers.dim", "must be positive")),
            Centers::Auto { dim: 1 } => Ok((0..num_classes)
                .map(|k| vec![2.0 * AUTO_RADIUS * (k as f64 - (num_classes - 1) as f64 / 2.0)])
                .collect()),
            Centers::Auto { dim } => Ok((0..num_classes)
                .map(|k| {
                    let angle = PI / 2.0 + 2.0 * PI * k as f64 / num_classes as f64;
                    let mut c = vec![0.0; *dim];
                    c[0] = AUTO_RADIUS * angle.cos();
                    c[1] = AUTO_RADIUS * angle.sin();
                    c
                })
                .collect()),
            Centers::Explicit(cs) => {
                if cs.len() != num_classes {
                    return Err(Error::LengthMismatch {
                        what: "centers vs num_classes",
                        left: cs.len(),
                        right: num_classes,
                    });
                }
                Ok(cs.clone())
            }
        }
    }
}

/// Isotropic Gaussian clusters, `per_class` points each, ordered by class.
pub fn make_blobs(
    num_classes: usize,
    per_class: usize,
    centers: &Centers,
    std: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if num_classes < 2 {
        return Err(Error::param("num_classes", "need at least two classes"));
    }
    if per_class == 0 {
        return Err(Error::param("per_class", "must be positive"));
    }
    if !(std > 0.0 && std.is_finite()) {
        return Err(Error::param("std", "must be positive and finite"));
    }
    let centers = centers.resolve(num_classes)?;
    let dim = centers[0].len();
    if dim == 0 || centers.iter().any(|c| c.len() != dim) {
        return Err(Error::param("centers", "centers must share a positive dimension"));
    }
    if centers.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::param("centers", "non-finite coordinate"));
    }
    for i in 0..centers.len() {
        for j in 0..i {
            if centers[i] == centers[j] {
                return Err(Error::param("centers", format!("classes {j} and {i} share a center")));
            }
        }
    }

    let mut rng = stream(seed, StreamTag::Data, &[0]);
    let mut points = Vec::with_capacity(num_classes * per_class);
    let mut labels = Vec::with_capacity(num_classes * per_class);
    for (k, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            let values = center
                .iter()
                .map(|c| c + std * rng.sample::<f64, _>(StandardNormal))
                .collect();
            points.push(FeatureVector::from_finite(values));
            labels.push(Label(k));
        }
    }
    LabeledDataset::from_parts(points, Some(labels), num_classes, Regime::InDomain, Layout::Plane)
}

/// Image-like classes: each class owns a random `side x side` glyph with
/// pixels at 0.2 or 0.8; samples add Gaussian jitter and clip to [0, 1].
pub fn make_glyphs(
    num_classes: usize,
    per_class: usize,
    side: usize,
    jitter_std: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if num_classes < 2 {
        return Err(Error::param("num_classes", "need at least two classes"));
    }
    if per_class == 0 || side < 2 {
        return Err(Error::param("per_class/side", "per_class >= 1 and side >= 2 required"));
    }
    if !(jitter_std >= 0.0 && jitter_std.is_finite()) {
        return Err(Error::param("jitter_std", "must be finite and non-negative"));
    }
    let dim = side * side;
    let mut rng = stream(seed, StreamTag::Data, &[1]);
    let mut templates: Vec<Vec<f64>> = Vec::with_capacity(num_classes);
    while templates.len() < num_classes {
        let t: Vec<f64> = (0..dim).map(|_| if rng.random::<bool>() { 0.8 } else { 0.2 }).collect();
        if !templates.contains(&t) {
            templates.push(t);
        }
    }
    let mut points = Vec::with_capacity(num_classes * per_class);
    let mut labels = Vec::with_capacity(num_classes * per_class);
    for (k, t) in templates.iter().enumerate() {
        for _ in 0..per_class {
            let values = t
                .iter()
                .map(|v| (v + jitter_std * rng.sample::<f64, _>(StandardNormal)).clamp(0.0, 1.0))
                .collect();
            points.push(FeatureVector::from_finite(values));
            labels.push(Label(k));
        }
    }
    LabeledDataset::from_parts(
        points,
        Some(labels),
        num_classes,
        Regime::InDomain,
        Layout::Image {
            width: side,
            height: side,
        },
    )
}

/// Splits a labeled set into its even- and odd-indexed samples. Generators
/// emit classes in blocks, so both halves stay balanced when `per_class` is
/// even, and glyph halves share their templates.
pub fn interleaved_split(data: &LabeledDataset) -> Result<(LabeledDataset, LabeledDataset)> {
    let half = |parity: usize| {
        let keep = (0..data.len()).filter(move |i| i % 2 == parity);
        LabeledDataset::from_parts(
            keep.clone().map(|i| data.points[i].clone()).collect(),
            data.labels.as_ref().map(|l| keep.map(|i| l[i]).collect()),
            data.num_classes,
            data.regime,
            data.layout,
        )
    };
    Ok((half(0)?, half(1)?))
}

/// A deterministic distribution shift.
///
/// Plane data: scale about the origin, rotate the first two coordinates,
/// translate, add noise. Image data: the same affine in pixel space about
/// the image center (bilinear resampling, zero fill), then noise and
/// clipping to [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftConfig {
    pub rotation_deg: f64,
    /// Either two entries (first two coordinates / pixel x, y) or one per feature.
    pub translate: Vec<f64>,
    pub scale: f64,
    pub additive_noise_std: f64,
    pub seed: u64,
}

impl ShiftConfig {
    pub fn identity(seed: u64) -> Self {
        Self {
            rotation_deg: 0.0,
            translate: vec![0.0, 0.0],
            scale: 1.0,
            additive_noise_std: 0.0,
            seed,
        }
    }

    /// Rotation 15 degrees, scale 1.1, noise at a tenth of the data spread.
    pub fn default_profile(data: &LabeledDataset, seed: u64) -> Self {
        Self {
            rotation_deg: 15.0,
            translate: vec![0.0, 0.0],
            scale: 1.1,
            additive_noise_std: 0.1 * data.feature_std(),
            seed,
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::param("scale", "must be positive and finite"));
        }
        if !(self.additive_noise_std >= 0.0 && self.additive_noise_std.is_finite()) {
            return Err(Error::param("additive_noise_std", "must be finite and non-negative"));
        }
        if !self.rotation_deg.is_finite() || self.translate.iter().any(|t| !t.is_finite()) {
            return Err(Error::param("rotation_deg/translate", "must be finite"));
        }
        if self.translate.len() != 2 && self.translate.len() != dim {
            return Err(Error::param(
                "translate",
                format!("expected 2 or {dim} entries, got {}", self.translate.len()),
            ));
        }
        Ok(())
    }
}

/// Applies `cfg` to every point of an in-domain set; labels are kept.
pub fn apply_shift(data: &LabeledDataset, cfg: &ShiftConfig) -> Result<LabeledDataset> {
    if data.regime() != Regime::InDomain {
        return Err(Error::param("data", "shifts apply to in-domain data only"));
    }
    let dim = data.dim().unwrap_or(2);
    cfg.validate(dim)?;
    let (sin, cos) = cfg.rotation_deg.to_radians().sin_cos();
    let points = data
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = stream(cfg.seed, StreamTag::Data, &[2, i as u64]);
            let mut v = match data.layout() {
                Layout::Plane => shift_plane(p, cfg, sin, cos),
                Layout::Image { width, height } => shift_image(p, width, height, cfg, sin, cos),
            };
            if cfg.additive_noise_std > 0.0 {
                for x in &mut v {
                    *x += cfg.additive_noise_std * rng.sample::<f64, _>(StandardNormal);
                }
            }
            if let Some((lo, hi)) = data.layout().clip_bounds() {
                v.iter_mut().for_each(|x| *x = x.clamp(lo, hi));
            }
            FeatureVector::new(v)
        })
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::from_parts(
        points,
        data.labels.clone(),
        data.num_classes,
        Regime::Shifted,
        data.layout,
    )
}

fn shift_plane(p: &[f64], cfg: &ShiftConfig, sin: f64, cos: f64) -> Vec<f64> {
    let mut v: Vec<f64> = p.iter().map(|x| x * cfg.scale).collect();
    if v.len() >= 2 {
        let (a, b) = (v[0], v[1]);
        v[0] = cos * a - sin * b;
        v[1] = sin * a + cos * b;
    }
    for (x, t) in v.iter_mut().zip(&cfg.translate) {
        *x += t;
    }
    v
}

fn shift_image(p: &[f64], width: usize, height: usize, cfg: &ShiftConfig, sin: f64, cos: f64) -> Vec<f64> {
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    let (tx, ty) = (cfg.translate[0], cfg.translate[1]);
    let pixel = |r: isize, c: isize| -> f64 {
        if r < 0 || c < 0 || r as usize >= height || c as usize >= width {
            0.0
        } else {
            p[r as usize * width + c as usize]
        }
    };
    let mut out = Vec::with_capacity(width * height);
    for r in 0..height {
        for c in 0..width {
            // Inverse map: undo translation, rotation, then scale.
            let u = c as f64 - cx - tx;
            let v = r as f64 - cy - ty;
            let su = (cos * u + sin * v) / cfg.scale + cx;
            let sv = (-sin * u + cos * v) / cfg.scale + cy;
            let (c0, r0) = (su.floor(), sv.floor());
            let (fc, fr) = (su - c0, sv - r0);
            let (c0, r0) = (c0 as isize, r0 as isize);
            let top = pixel(r0, c0) * (1.0 - fc) + pixel(r0, c0 + 1) * fc;
            let bottom = pixel(r0 + 1, c0) * (1.0 - fc) + pixel(r0 + 1, c0 + 1) * fc;
            out.push(top * (1.0 - fr) + bottom * fr);
        }
    }
    out
}

/// Unlabeled points that sit at least `min_distance` (Euclidean) from every
/// class center of `exclusion`.
///
/// Candidates are drawn uniformly from the ball around the centroid of the
/// class centers whose radius reaches the farthest center, so accepted points
/// fill the gaps between the in-domain classes rather than drifting off to
/// infinity. Image layouts additionally clip candidates to [0, 1].
pub fn make_ood(num_points: usize, exclusion: &LabeledDataset, min_distance: f64, seed: u64) -> Result<LabeledDataset> {
    if !(min_distance > 0.0 && min_distance.is_finite()) {
        return Err(Error::param("min_distance", "must be positive and finite"));
    }
    let centers = exclusion.class_centers();
    if centers.is_empty() {
        return Err(Error::param("exclusion", "needs labeled, non-empty data"));
    }
    let dim = centers[0].len();
    let centroid: Vec<f64> = (0..dim)
        .map(|j| centers.iter().map(|c| c[j]).sum::<f64>() / centers.len() as f64)
        .collect();
    let radius = centers
        .iter()
        .map(|c| euclid(c, &centroid))
        .fold(0.0, f64::max)
        .max(min_distance);

    let mut rng = stream(seed, StreamTag::Data, &[3]);
    let max_attempts = 1000 * num_points.max(1);
    let mut points = Vec::with_capacity(num_points);
    let mut attempts = 0;
    while points.len() < num_points {
        if attempts == max_attempts {
            return Err(Error::Infeasible {
                wanted: num_points,
                placed: points.len(),
                attempts,
            });
        }
        attempts += 1;
        let dir: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
        let mut cand: Vec<f64> = centroid.iter().zip(&dir).map(|(c, d)| c + r * d / norm).collect();
        if let Some((lo, hi)) = exclusion.layout().clip_bounds() {
            cand.iter_mut().for_each(|x| *x = x.clamp(lo, hi));
        }
        if centers.iter().all(|c| euclid(c, &cand) >= min_distance) {
            points.push(FeatureVector::from_finite(cand));
        }
    }
    LabeledDataset::from_parts(points, None, exclusion.num_classes, Regime::Ood, exclusion.layout)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
