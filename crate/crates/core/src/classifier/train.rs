//! Mini-batch gradient descent on mean cross-entropy.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use tracing::debug;

use super::network::{backward, forward_trace, loss, ModelParameters};
use crate::corpus::LabeledDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Coefficient of `½‖W‖²` added to the loss (weights only, not biases).
    pub l2_penalty: f64,
    /// Stop after this many epochs without validation-loss improvement.
    /// Zero disables early stopping. Ignored without a validation set.
    pub early_stop_patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            batch_size: 32,
            epochs: 200,
            seed: 0,
            l2_penalty: 1e-4,
            early_stop_patience: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(
                "learning_rate must be positive".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be positive".into()));
        }
        if !(self.l2_penalty >= 0.0 && self.l2_penalty.is_finite()) {
            return Err(Error::InvalidConfig(
                "l2_penalty must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Dense design matrix and integer targets.
#[derive(Debug, Clone)]
pub struct Batch {
    pub x: Array2<f64>,
    pub targets: Vec<usize>,
}

impl Batch {
    pub fn from_dataset(dataset: &LabeledDataset) -> Result<Batch> {
        let n_features = dataset.n_features().ok_or(Error::EmptyDataset)?;
        let mut x = Array2::zeros((dataset.len(), n_features));
        for (mut row, r) in x.rows_mut().into_iter().zip(&dataset.rows) {
            if r.features.len() != n_features {
                return Err(Error::DimensionMismatch {
                    expected: n_features,
                    actual: r.features.len(),
                });
            }
            for (dst, &c) in row.iter_mut().zip(&r.features.counts) {
                *dst = f64::from(c);
            }
        }
        Ok(Batch {
            x,
            targets: dataset.rows.iter().map(|r| r.category.index()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    fn select(&self, idx: &[usize]) -> Batch {
        Batch {
            x: self.x.select(Axis(0), idx),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
        }
    }
}

/// Mean cross-entropy (plus L2 term) of `model` on `batch`.
pub fn batch_loss(model: &ModelParameters, batch: &Batch, l2: f64) -> f64 {
    let trace = forward_trace(model, batch.x.view());
    loss(model, &trace.probs, &batch.targets, l2)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ModelParameters,
    /// Training-set loss before the first epoch and after every epoch.
    pub loss_history: Vec<f64>,
    /// Validation loss after every epoch, when a validation set was given.
    pub validation_history: Vec<f64>,
    pub epochs_run: usize,
    /// Epoch whose parameters were returned (0 means the initial ones).
    pub best_epoch: usize,
}

/// Train `model` on `dataset`.
///
/// Rows are reshuffled every epoch with a generator seeded from `cfg.seed`,
/// so a fixed model, dataset and configuration always give the same
/// parameters. With a validation set and a nonzero patience, training stops
/// once validation loss has not improved for `patience` epochs and the best
/// parameters seen are returned.
pub fn train(
    model: ModelParameters,
    dataset: &LabeledDataset,
    validation: Option<&LabeledDataset>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let data = Batch::from_dataset(dataset)?;
    if data.x.ncols() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            actual: data.x.ncols(),
        });
    }
    let val = match validation {
        Some(v) if !v.is_empty() => {
            let b = Batch::from_dataset(v)?;
            if b.x.ncols() != model.n_features() {
                return Err(Error::DimensionMismatch {
                    expected: model.n_features(),
                    actual: b.x.ncols(),
                });
            }
            Some(b)
        }
        _ => None,
    };

    let mut model = model;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut loss_history = vec![batch_loss(&model, &data, cfg.l2_penalty)];
    let mut validation_history = Vec::new();
    let mut best: Option<(f64, usize, ModelParameters)> = None;
    let mut since_best = 0;
    let mut epochs_run = 0;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let mb = data.select(chunk);
            let trace = forward_trace(&model, mb.x.view());
            let grads = backward(&model, &trace, &mb.targets, cfg.l2_penalty);
            for (layer, g) in model.layers.iter_mut().zip(&grads) {
                layer.weights.scaled_add(-cfg.learning_rate, &g.weights);
                layer.bias.scaled_add(-cfg.learning_rate, &g.bias);
            }
        }
        epochs_run = epoch;
        let train_loss = batch_loss(&model, &data, cfg.l2_penalty);
        if !train_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                loss: train_loss,
            });
        }
        loss_history.push(train_loss);
        debug!(epoch, train_loss, "epoch done");

        if let Some(val) = &val {
            let vl = batch_loss(&model, val, 0.0);
            validation_history.push(vl);
            if cfg.early_stop_patience > 0 {
                if best.as_ref().is_none_or(|(b, _, _)| vl < *b) {
                    best = Some((vl, epoch, model.clone()));
                    since_best = 0;
                } else {
                    since_best += 1;
                    if since_best >= cfg.early_stop_patience {
                        debug!(epoch, "early stop");
                        break;
                    }
                }
            }
        }
    }

    let (model, best_epoch) = match best {
        Some((_, epoch, m)) => (m, epoch),
        None => (model, epochs_run),
    };
    Ok(TrainOutcome {
        model,
        loss_history,
        validation_history,
        epochs_run,
        best_epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::Category;
    use crate::classifier::network::{init_model_with_hidden, ModelParameters};
    use crate::corpus::LabeledRow;
    use crate::features::FeatureVector;

    fn row(counts: Vec<u32>, c: Category) -> LabeledRow {
        LabeledRow {
            key: String::new(),
            features: FeatureVector {
                counts,
                vocab_version: "t".into(),
            },
            category: c,
        }
    }

    fn zeroed(n: usize) -> ModelParameters {
        let mut m = init_model_with_hidden(n, &[6, 4], 0).unwrap();
        m.params_mut().for_each(|p| *p = 0.0);
        m
    }

    #[test]
    fn uniform_initial_loss_is_ln8() {
        let rows = Category::ALL
            .iter()
            .map(|&c| row(vec![c.index() as u32, 1, 2], c))
            .collect();
        let ds = LabeledDataset::new(rows, "t");
        let b = Batch::from_dataset(&ds).unwrap();
        let l = batch_loss(&zeroed(3), &b, 0.0);
        assert!((l - 8f64.ln()).abs() < 1e-12, "{l}");
    }

    #[test]
    fn single_row_is_memorized() {
        let ds = LabeledDataset::new(vec![row(vec![1, 0, 2, 1], Category::Video)], "t");
        let model = init_model_with_hidden(4, &[8, 6], 5).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.1,
            epochs: 300,
            l2_penalty: 0.0,
            ..TrainConfig::default()
        };
        let out = train(model, &ds, None, &cfg).unwrap();
        let last = *out.loss_history.last().unwrap();
        assert!(last < 1e-3, "{last}");
        assert!(last < out.loss_history[0]);
        assert_eq!(out.loss_history.len(), 301);
    }

    #[test]
    fn deterministic_given_seed() {
        let rows = (0..40)
            .map(|i| {
                let c = Category::ALL[i % 8];
                let mut counts = vec![0; 8];
                counts[c.index()] = 1 + (i % 3) as u32;
                row(counts, c)
            })
            .collect();
        let ds = LabeledDataset::new(rows, "t");
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 7,
            seed: 3,
            ..TrainConfig::default()
        };
        let a = train(
            init_model_with_hidden(8, &[16, 8], 1).unwrap(),
            &ds,
            None,
            &cfg,
        )
        .unwrap();
        let b = train(
            init_model_with_hidden(8, &[16, 8], 1).unwrap(),
            &ds,
            None,
            &cfg,
        )
        .unwrap();
        let bits = |m: &ModelParameters| m.params().map(|p| p.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.model), bits(&b.model));
        assert_eq!(a.loss_history, b.loss_history);
    }

    #[test]
    fn errors() {
        let empty = LabeledDataset::new(vec![], "t");
        assert!(matches!(
            train(zeroed(3), &empty, None, &TrainConfig::default()),
            Err(Error::EmptyDataset)
        ));
        let ds = LabeledDataset::new(vec![row(vec![1, 2], Category::Video)], "t");
        assert!(matches!(
            train(zeroed(3), &ds, None, &TrainConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        let bad = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(train(zeroed(2), &ds, None, &bad).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let ds = LabeledDataset::new(
            vec![
                row(vec![u32::MAX, u32::MAX], Category::Video),
                row(vec![0, u32::MAX], Category::Content),
            ],
            "t",
        );
        let cfg = TrainConfig {
            learning_rate: 1e6,
            epochs: 50,
            ..TrainConfig::default()
        };
        let model = init_model_with_hidden(2, &[4, 4], 0).unwrap();
        assert!(matches!(
            train(model, &ds, None, &cfg),
            Err(Error::NonFiniteLoss { .. })
        ));
    }
}
