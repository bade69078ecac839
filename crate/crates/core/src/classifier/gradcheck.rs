//! Backpropagation check against central finite differences.

use rand::seq::index::sample;
use rand::SeedableRng;

use super::network::{backward, forward_trace, loss, ModelParameters};
use super::train::Batch;
use crate::error::{Error, Result};

/// Minimum number of coordinates compared (all of them if the model is smaller).
pub const MIN_COORDINATES: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    pub checked: usize,
    /// Coordinates skipped because the perturbation flipped a ReLU.
    pub skipped_kinks: usize,
}

/// `|a - n| / max(|a|, |n|)`, or 0 when both are exactly zero.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale == 0.0 {
        0.0
    } else {
        (analytic - numeric).abs() / scale
    }
}

fn relu_pattern(model: &ModelParameters, batch: &Batch) -> Vec<bool> {
    forward_trace(model, batch.x.view())
        .pre
        .iter()
        .flat_map(|z| z.iter().map(|&v| v > 0.0).collect::<Vec<_>>())
        .collect()
}

/// Compare the analytic gradient of the batch loss (cross-entropy plus
/// `l2` term) with central differences on a seeded random sample of at least
/// [`MIN_COORDINATES`] parameters.
///
/// Coordinates where `θ ± ε` changes which hidden units are active straddle
/// a ReLU kink, where the loss is not differentiable; those are counted in
/// `skipped_kinks` and excluded from the maximum.
pub fn gradient_check(
    model: &ModelParameters,
    batch: &Batch,
    epsilon: f64,
    l2: f64,
    seed: u64,
) -> Result<GradientCheck> {
    if batch.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if batch.x.ncols() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            actual: batch.x.ncols(),
        });
    }
    let trace = forward_trace(model, batch.x.view());
    let grads = backward(model, &trace, &batch.targets, l2);
    let analytic: Vec<f64> = grads
        .iter()
        .flat_map(|g| g.weights.iter().chain(g.bias.iter()).copied())
        .collect();

    let total = model.n_params();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<usize> = if total <= MIN_COORDINATES {
        (0..total).collect()
    } else {
        sample(&mut rng, total, MIN_COORDINATES).into_vec()
    };

    let eval = |m: &ModelParameters| {
        let t = forward_trace(m, batch.x.view());
        loss(m, &t.probs, &batch.targets, l2)
    };

    let mut probe = model.clone();
    let mut max_err: f64 = 0.0;
    let mut checked = 0;
    let mut skipped = 0;
    for &i in &coords {
        let orig = *probe.params_mut().nth(i).expect("index in range");
        *probe.params_mut().nth(i).unwrap() = orig + epsilon;
        let plus = eval(&probe);
        let plus_pattern = relu_pattern(&probe, batch);
        *probe.params_mut().nth(i).unwrap() = orig - epsilon;
        let minus = eval(&probe);
        let minus_pattern = relu_pattern(&probe, batch);
        *probe.params_mut().nth(i).unwrap() = orig;
        if plus_pattern != minus_pattern {
            skipped += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * epsilon);
        max_err = max_err.max(relative_error(analytic[i], numeric));
        checked += 1;
    }
    Ok(GradientCheck {
        max_relative_error: max_err,
        checked,
        skipped_kinks: skipped,
    })
}
