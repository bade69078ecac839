//! Feed-forward network: affine+ReLU hidden layers, affine+softmax output.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use crate::category::Category;
use crate::error::{Error, Result};
use crate::features::FeatureVector;

/// Hidden layer widths used unless a configuration overrides them.
pub const DEFAULT_HIDDEN: [usize; 2] = [350, 50];

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `fan_in × fan_out`, so a batch propagates as `x · W + b`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    pub fn fan_in(&self) -> usize {
        self.weights.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    pub layers: Vec<Layer>,
    pub vocab_version: String,
    /// Names of the input features, when the model carries its vocabulary.
    pub vocabulary: Option<Vec<String>>,
    pub threshold_default: f64,
}

impl ModelParameters {
    /// `[n_features, hidden..., 8]`.
    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.n_features()];
        dims.extend(self.layers.iter().map(Layer::fan_out));
        dims
    }

    pub fn n_features(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Check that shapes chain, the output has one unit per category, and all
    /// values are finite.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidModel("no layers".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.bias.len() != l.fan_out() {
                return Err(Error::InvalidModel(format!(
                    "layer {i}: bias has {} entries for {} outputs",
                    l.bias.len(),
                    l.fan_out()
                )));
            }
            if i > 0 && self.layers[i - 1].fan_out() != l.fan_in() {
                return Err(Error::InvalidModel(format!(
                    "layer {i}: fan-in {} does not match previous fan-out {}",
                    l.fan_in(),
                    self.layers[i - 1].fan_out()
                )));
            }
            if l.weights
                .iter()
                .chain(l.bias.iter())
                .any(|v| !v.is_finite())
            {
                return Err(Error::InvalidModel(format!(
                    "layer {i}: non-finite parameter"
                )));
            }
        }
        if self.layers[0].fan_in() == 0 {
            return Err(Error::InvalidModel("zero input features".into()));
        }
        let out = self.layers.last().unwrap().fan_out();
        if out != Category::COUNT {
            return Err(Error::InvalidModel(format!(
                "{out} output units, expected {}",
                Category::COUNT
            )));
        }
        if let Some(v) = &self.vocabulary {
            if v.len() != self.n_features() {
                return Err(Error::InvalidModel(format!(
                    "vocabulary has {} names for {} inputs",
                    v.len(),
                    self.n_features()
                )));
            }
        }
        Ok(())
    }

    /// Visit every parameter, weights before biases, layer by layer.
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }
}

/// `[n_features, 350, 50, 8]` with He-normal weights and zero biases.
pub fn init_model(n_features: usize, seed: u64) -> Result<ModelParameters> {
    init_model_with_hidden(n_features, &DEFAULT_HIDDEN, seed)
}

pub fn init_model_with_hidden(
    n_features: usize,
    hidden: &[usize],
    seed: u64,
) -> Result<ModelParameters> {
    if n_features < 1 {
        return Err(Error::InvalidConfig("n_features must be at least 1".into()));
    }
    if hidden.contains(&0) {
        return Err(Error::InvalidConfig(
            "hidden layer widths must be positive".into(),
        ));
    }
    let mut dims = vec![n_features];
    dims.extend_from_slice(hidden);
    dims.push(Category::COUNT);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let layers = dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
            Layer {
                weights: Array2::from_shape_simple_fn((fan_in, fan_out), || {
                    normal.sample(&mut rng)
                }),
                bias: Array1::zeros(fan_out),
            }
        })
        .collect();
    Ok(ModelParameters {
        layers,
        vocab_version: String::new(),
        vocabulary: None,
        threshold_default: super::DEFAULT_THRESHOLD,
    })
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|z| (z - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|e| e / sum);
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut a = Array2::from_shape_vec((1, logits.len()), logits.to_vec()).expect("1×n");
    softmax_rows(&mut a);
    a.into_raw_vec_and_offset().0
}

/// Intermediate values of one forward pass, kept for backpropagation.
pub(crate) struct Trace {
    /// Inputs to each layer (`activations[0]` is the batch itself).
    pub activations: Vec<Array2<f64>>,
    /// Pre-activations of the hidden layers.
    pub pre: Vec<Array2<f64>>,
    pub probs: Array2<f64>,
}

pub(crate) fn forward_trace(model: &ModelParameters, x: ArrayView2<f64>) -> Trace {
    let n = model.layers.len();
    let mut activations = vec![x.to_owned()];
    let mut pre = Vec::with_capacity(n - 1);
    for (i, layer) in model.layers.iter().enumerate() {
        let mut z = activations[i].dot(&layer.weights);
        z += &layer.bias;
        if i + 1 < n {
            let a = z.mapv(|v| v.max(0.0));
            pre.push(z);
            activations.push(a);
        } else {
            softmax_rows(&mut z);
            return Trace {
                activations,
                pre,
                probs: z,
            };
        }
    }
    unreachable!("model has at least one layer")
}

/// Class probabilities for a batch of rows.
pub fn forward_batch(model: &ModelParameters, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    if x.ncols() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            actual: x.ncols(),
        });
    }
    Ok(forward_trace(model, x).probs)
}

/// Class probabilities for one feature vector.
pub fn forward(model: &ModelParameters, x: &FeatureVector) -> Result<[f64; Category::COUNT]> {
    let row = Array2::from_shape_vec((1, x.len()), x.as_f64()).expect("1×n");
    let probs = forward_batch(model, row.view())?;
    let mut out = [0.0; Category::COUNT];
    for (o, p) in out.iter_mut().zip(probs.row(0)) {
        *o = *p;
    }
    Ok(out)
}

/// Mean cross-entropy of `probs` against integer targets, plus
/// `l2/2 · Σ‖W‖²` over the weight matrices.
pub(crate) fn loss(
    model: &ModelParameters,
    probs: &Array2<f64>,
    targets: &[usize],
    l2: f64,
) -> f64 {
    let ce: f64 = targets
        .iter()
        .enumerate()
        .map(|(i, &t)| -probs[[i, t]].max(f64::MIN_POSITIVE).ln())
        .sum::<f64>()
        / targets.len() as f64;
    if l2 == 0.0 {
        return ce;
    }
    let sq: f64 = model
        .layers
        .iter()
        .map(|l| l.weights.iter().map(|w| w * w).sum::<f64>())
        .sum();
    ce + 0.5 * l2 * sq
}

/// Gradients with the same layout as the model.
pub(crate) fn backward(
    model: &ModelParameters,
    trace: &Trace,
    targets: &[usize],
    l2: f64,
) -> Vec<Layer> {
    let batch = targets.len() as f64;
    let mut delta = trace.probs.clone();
    for (i, &t) in targets.iter().enumerate() {
        delta[[i, t]] -= 1.0;
    }
    delta /= batch;
    let mut grads = Vec::with_capacity(model.layers.len());
    for i in (0..model.layers.len()).rev() {
        let layer = &model.layers[i];
        let mut gw = trace.activations[i].t().dot(&delta);
        if l2 != 0.0 {
            gw.scaled_add(l2, &layer.weights);
        }
        let gb = delta.sum_axis(Axis(0));
        if i > 0 {
            let mut next = delta.dot(&layer.weights.t());
            next.zip_mut_with(&trace.pre[i - 1], |d, &z| {
                if z <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = next;
        }
        grads.push(Layer {
            weights: gw,
            bias: gb,
        });
    }
    grads.reverse();
    grads
}
