//! Script classifier: a feed-forward network over API-token counts, the
//! confidence gate that turns its output into a [`Label`], and evaluation.

mod gradcheck;
mod metrics;
mod model_file;
mod network;
mod train;

use serde::Serialize;

pub use gradcheck::{gradient_check, relative_error, GradientCheck, MIN_COORDINATES};
pub use metrics::{ClassMetrics, EvalReport, WeightedMetrics};
pub use model_file::category_encoding;
pub use network::{
    forward, forward_batch, init_model, init_model_with_hidden, softmax, softmax_rows, Layer,
    ModelParameters, DEFAULT_HIDDEN,
};
pub use train::{batch_loss, train, Batch, TrainConfig, TrainOutcome};

use crate::catalog::Vocabulary;
use crate::category::{Category, Label};
use crate::corpus::LabeledDataset;
use crate::error::{Error, Result};
use crate::features::{extract_features_bytes, FeatureVector};

/// Confidence a prediction must strictly exceed to be assigned.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationResult {
    #[serde(rename = "category")]
    pub label: Label,
    /// Largest class probability.
    pub confidence: f64,
    #[serde(skip)]
    pub probs: [f64; Category::COUNT],
}

fn check_threshold(threshold: f64) -> Result<()> {
    if (0.0..1.0).contains(&threshold) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "threshold {threshold} outside [0, 1)"
        )))
    }
}

/// Apply the confidence gate to a probability vector.
///
/// The argmax category (lowest index on ties) is returned only when its
/// probability is strictly greater than `threshold`; otherwise the result is
/// `Unassigned` with the same confidence and probabilities attached.
pub fn gate(probs: [f64; Category::COUNT], threshold: f64) -> ClassificationResult {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    let confidence = probs[best];
    let label = if confidence > threshold {
        Label::Assigned(Category::ALL[best])
    } else {
        Label::Unassigned
    };
    ClassificationResult {
        label,
        confidence,
        probs,
    }
}

/// Classify one feature vector, gated at `threshold` (in `[0, 1)`).
pub fn assign_category(
    model: &ModelParameters,
    x: &FeatureVector,
    threshold: f64,
) -> Result<ClassificationResult> {
    check_threshold(threshold)?;
    Ok(gate(forward(model, x)?, threshold))
}

/// Precision/recall/F1 of `model` on `dataset` at `threshold`.
///
/// Evaluation normally uses threshold 0, where every row is assigned.
pub fn evaluate(
    model: &ModelParameters,
    dataset: &LabeledDataset,
    threshold: f64,
) -> Result<EvalReport> {
    check_threshold(threshold)?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let batch = Batch::from_dataset(dataset)?;
    let probs = forward_batch(model, batch.x.view())?;
    let pairs = dataset.rows.iter().zip(probs.rows()).map(|(r, p)| {
        let mut arr = [0.0; Category::COUNT];
        arr.iter_mut().zip(p).for_each(|(a, b)| *a = *b);
        (r.category, gate(arr, threshold).label.category())
    });
    Ok(EvalReport::from_predictions(pairs))
}

/// A model bundled with its input vocabulary and default threshold.
#[derive(Debug, Clone)]
pub struct ScriptClassifier {
    model: ModelParameters,
    vocab: Vocabulary,
    threshold: f64,
}

impl ScriptClassifier {
    pub fn new(model: ModelParameters, vocab: Vocabulary) -> Result<Self> {
        model.validate()?;
        if vocab.len() != model.n_features() {
            return Err(Error::DimensionMismatch {
                expected: model.n_features(),
                actual: vocab.len(),
            });
        }
        if !model.vocab_version.is_empty() && model.vocab_version != vocab.version() {
            return Err(Error::VocabMismatch {
                expected: model.vocab_version.clone(),
                actual: vocab.version().to_string(),
            });
        }
        let threshold = model.threshold_default;
        Ok(ScriptClassifier {
            model,
            vocab,
            threshold,
        })
    }

    /// Use the vocabulary embedded in the model file.
    pub fn from_model(model: ModelParameters) -> Result<Self> {
        let names = model
            .vocabulary
            .clone()
            .ok_or_else(|| Error::InvalidModel("model file carries no vocabulary".into()))?;
        let vocab = Vocabulary::new(names)?;
        Self::new(model, vocab)
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        check_threshold(threshold)?;
        self.threshold = threshold;
        Ok(self)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn model(&self) -> &ModelParameters {
        &self.model
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn features(&self, source: &[u8]) -> FeatureVector {
        extract_features_bytes(source, &self.vocab)
    }

    pub fn classify_source(&self, source: &[u8]) -> ClassificationResult {
        let x = self.features(source);
        assign_category(&self.model, &x, self.threshold)
            .expect("dimensions checked at construction")
    }
}
