//! Recursive feature elimination.
//!
//! Each round fits a ranking model on the surviving features, scores every
//! feature, and drops the lowest-scoring ones until `target_k` remain.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::catalog::Vocabulary;
use crate::category::Category;
use crate::classifier::{softmax_rows, Batch};
use crate::corpus::LabeledDataset;
use crate::error::{Error, Result};

/// Feature count kept by default.
pub const DEFAULT_TARGET_K: usize = 508;

/// How many features a round removes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RfeStep {
    Fixed(usize),
    /// `max(1, floor(fraction × remaining))`.
    FractionOfRemaining(f64),
}

impl RfeStep {
    fn size(self, remaining: usize) -> usize {
        match self {
            RfeStep::Fixed(n) => n.max(1),
            RfeStep::FractionOfRemaining(f) => ((f * remaining as f64).floor() as usize).max(1),
        }
    }
}

/// Scores features; higher means more informative.
pub trait FeatureRanker {
    fn importances(&self, x: ArrayView2<f64>, targets: &[usize]) -> Vec<f64>;
}

/// Multinomial logistic regression fitted by full-batch gradient descent
/// from zero weights on z-scored columns. A feature's importance is the L2
/// norm of its weight row across the eight classes.
///
/// Standardizing inside the ranker keeps importances comparable across
/// features with very different count scales; the selected features are
/// still fed to the classifier as raw counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftmaxRanker {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2_penalty: f64,
}

impl Default for SoftmaxRanker {
    fn default() -> Self {
        SoftmaxRanker {
            epochs: 100,
            learning_rate: 0.5,
            l2_penalty: 1e-4,
        }
    }
}

impl FeatureRanker for SoftmaxRanker {
    fn importances(&self, x: ArrayView2<f64>, targets: &[usize]) -> Vec<f64> {
        let n = x.nrows() as f64;
        let mean = x.mean_axis(Axis(0)).expect("non-empty");
        let std = x.std_axis(Axis(0), 0.0);
        let mut z = x.to_owned();
        for mut col_row in z.rows_mut() {
            for ((v, m), s) in col_row.iter_mut().zip(&mean).zip(&std) {
                *v = if *s > 0.0 { (*v - m) / s } else { 0.0 };
            }
        }
        let k = Category::COUNT;
        let mut w = Array2::<f64>::zeros((z.ncols(), k));
        let mut b = Array1::<f64>::zeros(k);
        let mut onehot = Array2::<f64>::zeros((z.nrows(), k));
        for (i, &t) in targets.iter().enumerate() {
            onehot[[i, t]] = 1.0;
        }
        for _ in 0..self.epochs {
            let mut p = z.dot(&w);
            p += &b;
            softmax_rows(&mut p);
            p -= &onehot;
            p /= n;
            let mut gw = z.t().dot(&p);
            gw.scaled_add(self.l2_penalty, &w);
            let gb = p.sum_axis(Axis(0));
            w.scaled_add(-self.learning_rate, &gw);
            b.scaled_add(-self.learning_rate, &gb);
        }
        w.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfeConfig {
    pub target_k: usize,
    pub step: RfeStep,
    pub ranker: SoftmaxRanker,
}

impl Default for RfeConfig {
    fn default() -> Self {
        RfeConfig {
            target_k: DEFAULT_TARGET_K,
            step: RfeStep::FractionOfRemaining(0.05),
            ranker: SoftmaxRanker::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RfeOutcome {
    pub vocabulary: Vocabulary,
    /// Removed feature names, worst first.
    pub elimination_order: Vec<String>,
    pub rounds: usize,
}

/// Run RFE with the configured softmax ranker.
pub fn rfe_select(
    dataset: &LabeledDataset,
    vocab: &Vocabulary,
    cfg: &RfeConfig,
) -> Result<RfeOutcome> {
    rfe_select_with(dataset, vocab, cfg.target_k, cfg.step, &cfg.ranker)
}

/// Run RFE with any ranker.
pub fn rfe_select_with(
    dataset: &LabeledDataset,
    vocab: &Vocabulary,
    target_k: usize,
    step: RfeStep,
    ranker: &dyn FeatureRanker,
) -> Result<RfeOutcome> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if target_k == 0 || target_k > vocab.len() {
        return Err(Error::InvalidConfig(format!(
            "target_k {target_k} must be in 1..={}",
            vocab.len()
        )));
    }
    if let RfeStep::FractionOfRemaining(f) = step {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "step fraction {f} outside (0, 1)"
            )));
        }
    }
    let data = Batch::from_dataset(dataset)?;
    if data.x.ncols() != vocab.len() {
        return Err(Error::DimensionMismatch {
            expected: vocab.len(),
            actual: data.x.ncols(),
        });
    }

    let mut alive: Vec<usize> = (0..vocab.len()).collect();
    let mut eliminated = Vec::with_capacity(vocab.len() - target_k);
    let mut rounds = 0;
    while alive.len() > target_k {
        let x = data.x.select(Axis(1), &alive);
        let scores = ranker.importances(x.view(), &data.targets);
        let drop = step.size(alive.len()).min(alive.len() - target_k);
        let mut ranked: Vec<usize> = (0..alive.len()).collect();
        ranked.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
        let mut removed: Vec<usize> = ranked[..drop].to_vec();
        for &r in &removed {
            eliminated.push(vocab.names()[alive[r]].clone());
        }
        removed.sort_unstable();
        for r in removed.into_iter().rev() {
            alive.remove(r);
        }
        rounds += 1;
        tracing::debug!(round = rounds, remaining = alive.len(), "rfe round");
    }
    let keep: Vec<&str> = alive.iter().map(|&i| vocab.names()[i].as_str()).collect();
    Ok(RfeOutcome {
        vocabulary: vocab.select(&keep)?,
        elimination_order: eliminated,
        rounds,
    })
}
