use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::logistic::{train_binary_from, BinaryScorer, TrainConfig};
use super::rows::{Row, Rows};
use crate::corpus::LabelSet;
use crate::par;
use crate::Result;

/// Score emitted by the scorer of a class that has no negative examples.
pub const CONSTANT_POSITIVE_SCORE: f64 = 10.0;

/// One independently trained binary scorer per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultilabelClassifier {
    pub scorers: Vec<BinaryScorer>,
}

impl MultilabelClassifier {
    /// A classifier whose every scorer is a trivial rejector.
    pub fn all_trivial(n_classes: usize) -> Self {
        Self { scorers: (0..n_classes).map(|_| BinaryScorer::trivial_rejector()).collect() }
    }

    pub fn n_classes(&self) -> usize {
        self.scorers.len()
    }

    pub fn scores<X: Row + ?Sized>(&self, x: &X) -> Vec<f64> {
        self.scorers.iter().map(|s| s.score(x)).collect()
    }

    pub fn decide<X: Row + ?Sized>(&self, x: &X) -> LabelSet {
        self.scorers.iter().enumerate().filter(|(_, s)| s.decide(x)).map(|(c, _)| c).collect()
    }

    pub fn is_trivial(&self, class: usize) -> bool {
        self.scorers[class].is_trivial_rejector
    }
}

/// Trains one scorer per class on `rows`.
///
/// Classes without positive examples get trivial rejectors; classes without
/// negative examples get a constant scorer at [`CONSTANT_POSITIVE_SCORE`].
pub fn train_multilabel<R: Rows + ?Sized>(
    rows: &R,
    labels: &[LabelSet],
    n_classes: usize,
    cfg: &TrainConfig,
) -> Result<MultilabelClassifier> {
    train_multilabel_from(rows, labels, n_classes, cfg, None)
}

/// [`train_multilabel`] warm-started from the scorers of `init`.
pub fn train_multilabel_from<R: Rows + ?Sized>(
    rows: &R,
    labels: &[LabelSet],
    n_classes: usize,
    cfg: &TrainConfig,
    init: Option<&MultilabelClassifier>,
) -> Result<MultilabelClassifier> {
    cfg.validate()?;
    if rows.len() != labels.len() {
        return Err(crate::Error::LengthMismatch { left: rows.len(), right: labels.len() });
    }
    let scorers = par::map_indexed(n_classes, |class| {
        let y: Vec<bool> = labels.iter().map(|l| l.contains(class)).collect();
        let positives = y.iter().filter(|&&v| v).count();
        if positives == 0 {
            Ok(BinaryScorer::trivial_rejector())
        } else if positives == y.len() {
            Ok(BinaryScorer::constant(CONSTANT_POSITIVE_SCORE))
        } else {
            train_binary_from(rows, &y, cfg, init.and_then(|m| m.scorers.get(class)))
        }
    });
    Ok(MultilabelClassifier { scorers: scorers.into_iter().collect::<Result<_>>()? })
}
