//! Confusion matrix, per-class precision/recall/F1 and support-weighted means.

use serde::Serialize;

use crate::category::Category;

const K: usize = Category::COUNT;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct WeightedMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// Indexed by category encoding.
    pub per_class: [ClassMetrics; K],
    pub weighted: WeightedMetrics,
    pub accuracy: f64,
    /// `confusion[truth][predicted]`.
    pub confusion: [[u64; K]; K],
    /// Predictions that fell below the threshold (not in the matrix).
    pub unassigned: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    /// Build from `(truth, prediction)` pairs; a `None` prediction counts as
    /// a miss for recall and is tallied in `unassigned`.
    pub fn from_predictions(
        pairs: impl IntoIterator<Item = (Category, Option<Category>)>,
    ) -> EvalReport {
        let mut confusion = [[0u64; K]; K];
        let mut support = [0u64; K];
        let mut unassigned = 0;
        for (truth, pred) in pairs {
            support[truth.index()] += 1;
            match pred {
                Some(p) => confusion[truth.index()][p.index()] += 1,
                None => unassigned += 1,
            }
        }
        let mut per_class = [ClassMetrics::default(); K];
        for c in 0..K {
            let tp = confusion[c][c];
            let predicted: u64 = (0..K).map(|t| confusion[t][c]).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support[c]);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            per_class[c] = ClassMetrics {
                precision,
                recall,
                f1,
                support: support[c],
            };
        }
        let total: u64 = support.iter().sum();
        let weighted_mean = |f: fn(&ClassMetrics) -> f64| {
            if total == 0 {
                0.0
            } else {
                per_class
                    .iter()
                    .map(|m| m.support as f64 * f(m))
                    .sum::<f64>()
                    / total as f64
            }
        };
        let weighted = WeightedMetrics {
            precision: weighted_mean(|m| m.precision),
            recall: weighted_mean(|m| m.recall),
            f1: weighted_mean(|m| m.f1),
        };
        let correct: u64 = (0..K).map(|c| confusion[c][c]).sum();
        EvalReport {
            per_class,
            weighted,
            accuracy: ratio(correct, total),
            confusion,
            unassigned,
        }
    }

    pub fn total(&self) -> u64 {
        self.per_class.iter().map(|m| m.support).sum()
    }
}
