//! Versioned JSON checkpoints.
//!
//! ```json
//! { "version": 1, "activation": "relu", "layer_dims": [2, 16, 3],
//!   "layers": [ { "weights": [...], "biases": [...] }, ... ] }
//! ```
//!
//! `weights` is row-major with one row per output unit. Floats are written in
//! shortest round-trip form, so loading reproduces every parameter bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Dense, MlpModel};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDoc {
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointDoc {
    version: u32,
    activation: Activation,
    layer_dims: Vec<usize>,
    layers: Vec<LayerDoc>,
}

pub fn write_checkpoint<W: Write>(model: &MlpModel, writer: W) -> Result<()> {
    let doc = CheckpointDoc {
        version: CHECKPOINT_VERSION,
        activation: model.activation(),
        layer_dims: model.layer_dims(),
        layers: model
            .layers()
            .iter()
            .map(|l| LayerDoc {
                weights: l.weights().to_vec(),
                biases: l.biases().to_vec(),
            })
            .collect(),
    };
    serde_json::to_writer_pretty(writer, &doc)?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(reader: R) -> Result<MlpModel> {
    let doc: CheckpointDoc = serde_json::from_reader(reader).map_err(|e| Error::MalformedCheckpoint {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if doc.version != CHECKPOINT_VERSION {
        return Err(Error::InconsistentCheckpoint(format!(
            "unsupported version {}",
            doc.version
        )));
    }
    if doc.layer_dims.len() != doc.layers.len() + 1 {
        return Err(Error::InconsistentCheckpoint(format!(
            "{} layer dims declared for {} layers",
            doc.layer_dims.len(),
            doc.layers.len()
        )));
    }
    let layers = doc
        .layers
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            let (inputs, outputs) = (doc.layer_dims[i], doc.layer_dims[i + 1]);
            Dense::from_flat(inputs, outputs, l.weights, l.biases)
                .map_err(|e| Error::InconsistentCheckpoint(format!("layer {i}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    MlpModel::from_layers(layers)
}

pub fn save_checkpoint(model: &MlpModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    write_checkpoint(model, &mut writer)?;
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<MlpModel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(BufReader::new(file))
}
