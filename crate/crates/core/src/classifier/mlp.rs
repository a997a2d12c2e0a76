use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    argmax, check_dims, cross_entropy, softmax, BlackBoxClassifier, FeatureVector, Label, Objective, WhiteBoxClassifier,
};
use crate::error::{Error, Result};
use crate::rng::{stream, StreamTag};

const PAR_MIN_ROWS: usize = 256;

/// Hidden-layer nonlinearity. Output logits are always linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

/// A fully connected layer with row-major `outputs x inputs` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Dense {
    /// Builds a layer from weight rows (one row per output unit).
    pub fn new(rows: Vec<Vec<f64>>, biases: Vec<f64>) -> Result<Self> {
        let outputs = rows.len();
        if outputs == 0 {
            return Err(Error::Empty("layer rows"));
        }
        let inputs = rows[0].len();
        if inputs == 0 || rows.iter().any(|r| r.len() != inputs) {
            return Err(Error::param("rows", "ragged or empty weight rows"));
        }
        Self::from_flat(inputs, outputs, rows.concat(), biases)
    }

    pub fn from_flat(inputs: usize, outputs: usize, weights: Vec<f64>, biases: Vec<f64>) -> Result<Self> {
        if weights.len() != inputs * outputs {
            return Err(Error::LengthMismatch {
                what: "weights vs inputs*outputs",
                left: weights.len(),
                right: inputs * outputs,
            });
        }
        if biases.len() != outputs {
            return Err(Error::LengthMismatch {
                what: "biases vs outputs",
                left: biases.len(),
                right: outputs,
            });
        }
        if let Some(index) = weights.iter().chain(&biases).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            inputs,
            outputs,
            weights,
            biases,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn row(&self, unit: usize) -> &[f64] {
        &self.weights[unit * self.inputs..(unit + 1) * self.inputs]
    }

    fn apply(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.biases.iter().enumerate().map(|(o, b)| b + dot(self.row(o), input)));
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-layer parameter gradients, same layout as the layers.
#[derive(Debug, Clone)]
pub(crate) struct ParamGrads {
    pub(crate) layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl ParamGrads {
    pub(crate) fn zeros(model: &MlpModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.biases.len()]))
                .collect(),
        }
    }
}

struct Trace {
    /// activations[0] is the input; activations[l] feeds layer l.
    activations: Vec<Vec<f64>>,
    /// Pre-activations of every layer; the last entry is the logit vector.
    pre: Vec<Vec<f64>>,
}

/// Multilayer perceptron with ReLU hidden layers and raw logit outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Dense>,
    activation: Activation,
}

impl MlpModel {
    /// Glorot-uniform weights, zero biases, seeded.
    pub fn new(layer_dims: &[usize], seed: u64) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::param("layer_dims", "need at least input and output dims"));
        }
        if layer_dims.contains(&0) {
            return Err(Error::param("layer_dims", "zero-width layer"));
        }
        let mut rng = stream(seed, StreamTag::Init, &[]);
        let layers = layer_dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights = (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-limit..=limit))
                    .collect();
                Dense {
                    inputs: fan_in,
                    outputs: fan_out,
                    weights,
                    biases: vec![0.0; fan_out],
                }
            })
            .collect();
        Ok(Self {
            layers,
            activation: Activation::Relu,
        })
    }

    /// Assembles a model from explicit layers, checking shape continuity.
    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("layers"));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::param(
                    format!("layers[{}]", i + 1),
                    format!(
                        "expects {} inputs but previous layer has {} outputs",
                        pair[1].inputs, pair[0].outputs
                    ),
                ));
            }
        }
        Ok(Self {
            layers,
            activation: Activation::Relu,
        })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs)
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// A stable 64-bit fingerprint of every parameter bit.
    pub fn digest(&self) -> u64 {
        let mut words: Vec<u64> = self.layer_dims().iter().map(|&d| d as u64).collect();
        for l in &self.layers {
            words.extend(l.weights.iter().chain(&l.biases).map(|v| v.to_bits()));
        }
        crate::rng::mix(&words)
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let mut activations = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        activations.push(x.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.outputs);
            layer.apply(&activations[i], &mut z);
            if i + 1 < self.layers.len() {
                activations.push(z.iter().map(|v| v.max(0.0)).collect());
            }
            pre.push(z);
        }
        Trace { activations, pre }
    }

    fn logits_one(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply(&cur, &mut next);
            if i < last {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// Logits for every row of `batch`, in order.
    pub fn forward(&self, batch: &[FeatureVector]) -> Result<Vec<Vec<f64>>> {
        check_dims(batch, self.input_dim())?;
        Ok(batch
            .par_iter()
            .with_min_len(PAR_MIN_ROWS)
            .map(|x| self.logits_one(x))
            .collect())
    }

    /// Top-1 labels, lowest index on ties.
    pub fn predict_top1(&self, batch: &[FeatureVector]) -> Result<Vec<Label>> {
        check_dims(batch, self.input_dim())?;
        Ok(batch
            .par_iter()
            .with_min_len(PAR_MIN_ROWS)
            .map(|x| argmax(&self.logits_one(x)))
            .collect())
    }

    /// Backpropagates `d_logits` through the trace, accumulating parameter
    /// gradients into `params` when given, and returns the input gradient.
    fn backward(&self, trace: &Trace, d_logits: Vec<f64>, mut params: Option<&mut ParamGrads>) -> Vec<f64> {
        let mut delta = d_logits;
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &trace.activations[l];
            if let Some(p) = params.as_deref_mut() {
                let (gw, gb) = &mut p.layers[l];
                for (o, &d) in delta.iter().enumerate() {
                    gb[o] += d;
                    if d != 0.0 {
                        let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                        row.iter_mut().zip(input).for_each(|(g, a)| *g += d * a);
                    }
                }
            }
            let mut upstream = vec![0.0; layer.inputs];
            for (o, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    upstream.iter_mut().zip(layer.row(o)).for_each(|(u, w)| *u += d * w);
                }
            }
            if l > 0 {
                for (u, z) in upstream.iter_mut().zip(&trace.pre[l - 1]) {
                    if *z <= 0.0 {
                        *u = 0.0;
                    }
                }
            }
            delta = upstream;
        }
        delta
    }

    fn objective_seed(&self, logits: &[f64], objective: Objective) -> Vec<f64> {
        match objective {
            Objective::Logit(c) => {
                let mut d = vec![0.0; logits.len()];
                d[c.0] = 1.0;
                d
            }
            Objective::Loss(label) => {
                let mut p = softmax(logits);
                p[label.0] -= 1.0;
                p
            }
        }
    }

    /// Value of `objective` at `x`.
    pub fn objective_value(&self, x: &FeatureVector, objective: Objective) -> Result<f64> {
        check_dims(std::slice::from_ref(x), self.input_dim())?;
        objective.class().checked(self.num_classes())?;
        let logits = self.logits_one(x);
        Ok(match objective {
            Objective::Logit(c) => logits[c.0],
            Objective::Loss(label) => cross_entropy(&logits, label),
        })
    }

    /// Cross-entropy at `x` and its parameter gradient, accumulated into `grads`.
    pub(crate) fn accumulate_loss_grad(&self, x: &[f64], label: Label, grads: &mut ParamGrads) -> f64 {
        let trace = self.trace(x);
        let logits = trace.pre.last().expect("at least one layer");
        let loss = cross_entropy(logits, label);
        let seed = self.objective_seed(logits, Objective::Loss(label));
        self.backward(&trace, seed, Some(grads));
        loss
    }

    pub(crate) fn apply_update(&mut self, grads: &ParamGrads, scale: f64) {
        for (layer, (gw, gb)) in self.layers.iter_mut().zip(&grads.layers) {
            layer.weights.iter_mut().zip(gw).for_each(|(w, g)| *w -= scale * g);
            layer.biases.iter_mut().zip(gb).for_each(|(b, g)| *b -= scale * g);
        }
    }

    pub(crate) fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    /// Smallest |pre-activation| over all hidden units at `x`; finite
    /// differences are only trustworthy when this is comfortably above the
    /// step size.
    pub fn min_kink_distance(&self, x: &FeatureVector) -> f64 {
        let trace = self.trace(x);
        trace.pre[..trace.pre.len() - 1]
            .iter()
            .flatten()
            .map(|z| z.abs())
            .fold(f64::INFINITY, f64::min)
    }
}

impl BlackBoxClassifier for MlpModel {
    fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    fn num_classes(&self) -> usize {
        self.layers.last().expect("non-empty").outputs
    }

    fn classify(&self, batch: &[FeatureVector]) -> Result<Vec<Label>> {
        self.predict_top1(batch)
    }
}

impl WhiteBoxClassifier for MlpModel {
    fn logits(&self, batch: &[FeatureVector]) -> Result<Vec<Vec<f64>>> {
        self.forward(batch)
    }

    fn input_gradient(&self, x: &FeatureVector, objective: Objective) -> Result<Vec<f64>> {
        check_dims(std::slice::from_ref(x), self.input_dim())?;
        objective.class().checked(self.num_classes())?;
        let trace = self.trace(x);
        let seed = self.objective_seed(trace.pre.last().expect("non-empty"), objective);
        Ok(self.backward(&trace, seed, None))
    }
}

/// Central-difference step used by [`grad_check`].
pub const FD_STEP: f64 = 1e-5;

/// Maximum coordinate-wise relative error between backprop input gradients
/// and central finite differences, over every logit and the cross-entropy
/// of the predicted class.
pub fn grad_check(model: &MlpModel, x: &FeatureVector) -> Result<f64> {
    let pred = model.classify_one(x)?;
    let objectives = (0..model.num_classes())
        .map(|c| Objective::Logit(Label(c)))
        .chain(std::iter::once(Objective::Loss(pred)));
    let mut worst: f64 = 0.0;
    for objective in objectives {
        let analytic = model.input_gradient(x, objective)?;
        for (j, &a) in analytic.iter().enumerate() {
            let mut plus = x.values().to_vec();
            let mut minus = plus.clone();
            plus[j] += FD_STEP;
            minus[j] -= FD_STEP;
            let f_plus = model.objective_value(&FeatureVector::from_finite(plus), objective)?;
            let f_minus = model.objective_value(&FeatureVector::from_finite(minus), objective)?;
            let numeric = (f_plus - f_minus) / (2.0 * FD_STEP);
            let denom = a.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max((a - numeric).abs() / denom);
        }
    }
    Ok(worst)
}
