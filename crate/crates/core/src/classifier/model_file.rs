//! JSON model files.
//!
//! ```json
//! {"version": "...", "vocab_version": "...", "category_encoding": {"advertising": 0, ...},
//!  "layer_dims": [n, 350, 50, 8],
//!  "layers": [{"weights": [/* row-major fan_in × fan_out */], "bias": [...]}, ...],
//!  "threshold_default": 0.5, "vocabulary": ["...", ...]}
//! ```
//!
//! Floats are written in shortest round-trip form and parsed with correct
//! rounding, so a save/load cycle reproduces every parameter bit for bit.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::network::{Layer, ModelParameters};
use crate::category::Category;
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct LayerRecord {
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelRecord {
    version: String,
    vocab_version: String,
    category_encoding: BTreeMap<String, usize>,
    layer_dims: Vec<usize>,
    layers: Vec<LayerRecord>,
    threshold_default: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vocabulary: Option<Vec<String>>,
}

pub fn category_encoding() -> BTreeMap<String, usize> {
    Category::ALL
        .iter()
        .map(|c| (c.as_str().to_string(), c.index()))
        .collect()
}

impl ModelParameters {
    /// Content fingerprint of the parameters and input vocabulary version.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.vocab_version.as_bytes());
        for d in self.layer_dims() {
            h.update((d as u64).to_le_bytes());
        }
        for p in self.params() {
            h.update(p.to_bits().to_le_bytes());
        }
        format!("mlp-{}", &hex::encode(h.finalize())[..12])
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let record = ModelRecord {
            version: self.fingerprint(),
            vocab_version: self.vocab_version.clone(),
            category_encoding: category_encoding(),
            layer_dims: self.layer_dims(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerRecord {
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
            threshold_default: self.threshold_default,
            vocabulary: self.vocabulary.clone(),
        };
        Ok(serde_json::to_string(&record)?)
    }

    pub fn from_json(text: &str) -> Result<ModelParameters> {
        let rec: ModelRecord = serde_json::from_str(text)?;
        if rec.category_encoding != category_encoding() {
            return Err(Error::InvalidModel(format!(
                "category encoding {:?} differs from this build's",
                rec.category_encoding
            )));
        }
        if rec.layer_dims.len() != rec.layers.len() + 1 {
            return Err(Error::InvalidModel(format!(
                "{} layer dims for {} layers",
                rec.layer_dims.len(),
                rec.layers.len()
            )));
        }
        let layers = rec
            .layers
            .into_iter()
            .enumerate()
            .map(|(i, l)| {
                let (fan_in, fan_out) = (rec.layer_dims[i], rec.layer_dims[i + 1]);
                let weights =
                    Array2::from_shape_vec((fan_in, fan_out), l.weights).map_err(|_| {
                        Error::InvalidModel(format!(
                            "layer {i}: weights do not have shape {fan_in}×{fan_out}"
                        ))
                    })?;
                Ok(Layer {
                    weights,
                    bias: Array1::from(l.bias),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if !(0.0..1.0).contains(&rec.threshold_default) {
            return Err(Error::InvalidModel(format!(
                "threshold_default {} outside [0, 1)",
                rec.threshold_default
            )));
        }
        let model = ModelParameters {
            layers,
            vocab_version: rec.vocab_version,
            vocabulary: rec.vocabulary,
            threshold_default: rec.threshold_default,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ModelParameters> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
