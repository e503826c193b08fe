//! Confusion accounting, F1 and K with their degenerate branches, micro and
//! macro averaging, and the significance statistics used in reports.

mod stats;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::LabelSet;
use crate::{Error, Result};

pub use stats::{
    mean_and_sd, paired_ttest, pearson, regularized_incomplete_beta, student_t_two_tailed, Correlation, TTest,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

impl core::ops::Add for ConfusionCounts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { tp: self.tp + o.tp, fp: self.fp + o.fp, fn_: self.fn_ + o.fn_, tn: self.tn + o.tn }
    }
}

impl core::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

/// Per-class confusion counts of `pred` against `gold`.
pub fn confusion(gold: &[LabelSet], pred: &[LabelSet], n_classes: usize) -> Result<Vec<ConfusionCounts>> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch { left: gold.len(), right: pred.len() });
    }
    let mut counts = vec![ConfusionCounts::default(); n_classes];
    for (g, p) in gold.iter().zip(pred) {
        g.check(n_classes)?;
        p.check(n_classes)?;
        for (c, cc) in counts.iter_mut().enumerate() {
            match (g.contains(c), p.contains(c)) {
                (true, true) => cc.tp += 1,
                (false, true) => cc.fp += 1,
                (true, false) => cc.fn_ += 1,
                (false, false) => cc.tn += 1,
            }
        }
    }
    Ok(counts)
}

/// 2TP / (2TP + FP + FN), and 1 when TP = FP = FN = 0.
pub fn f1(c: &ConfusionCounts) -> f64 {
    let denom = 2 * c.tp + c.fp + c.fn_;
    if denom == 0 {
        1.0
    } else {
        (2 * c.tp) as f64 / denom as f64
    }
}

/// Sensitivity + specificity − 1, with the one-sided branches when there are
/// no positives or no negatives. An all-zero table scores 0.
pub fn k_measure(c: &ConfusionCounts) -> f64 {
    let pos = c.tp + c.fn_;
    let neg = c.tn + c.fp;
    match (pos, neg) {
        (0, 0) => 0.0,
        (0, _) => 2.0 * c.tn as f64 / neg as f64 - 1.0,
        (_, 0) => 2.0 * c.tp as f64 / pos as f64 - 1.0,
        _ => c.tp as f64 / pos as f64 + c.tn as f64 / neg as f64 - 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    F1,
    K,
}

impl Measure {
    pub fn apply(self, c: &ConfusionCounts) -> f64 {
        match self {
            Measure::F1 => f1(c),
            Measure::K => k_measure(c),
        }
    }
}

/// (micro, macro): the measure of the pooled counts and the mean of the
/// per-class measures.
pub fn micro_macro_aggregate(per_class: &[ConfusionCounts], measure: Measure) -> Result<(f64, f64)> {
    if per_class.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, found: 0 });
    }
    let pooled: ConfusionCounts = per_class.iter().copied().sum();
    let macro_ = per_class.iter().map(|c| measure.apply(c)).sum::<f64>() / per_class.len() as f64;
    Ok((measure.apply(&pooled), macro_))
}

/// Descriptive fields attached to an evaluation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMeta {
    pub method: String,
    pub variant: String,
    pub mode: String,
    pub dataset: String,
    pub trial: u64,
    pub language: String,
    pub train_seconds: f64,
    pub test_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub meta: RunMeta,
    pub per_class: Vec<ConfusionCounts>,
    pub f1_micro: f64,
    pub f1_macro: f64,
    pub k_micro: f64,
    pub k_macro: f64,
}

impl EvalReport {
    pub fn from_counts(meta: RunMeta, per_class: Vec<ConfusionCounts>) -> Result<Self> {
        let (f1_micro, f1_macro) = micro_macro_aggregate(&per_class, Measure::F1)?;
        let (k_micro, k_macro) = micro_macro_aggregate(&per_class, Measure::K)?;
        Ok(Self { meta, per_class, f1_micro, f1_macro, k_micro, k_macro })
    }

    pub fn evaluate(meta: RunMeta, gold: &[LabelSet], pred: &[LabelSet], n_classes: usize) -> Result<Self> {
        Self::from_counts(meta, confusion(gold, pred, n_classes)?)
    }

    /// True when the stored aggregates equal a recomputation from `per_class`.
    pub fn is_consistent(&self) -> bool {
        Self::from_counts(self.meta.clone(), self.per_class.clone()).is_ok_and(|r| {
            r.f1_micro == self.f1_micro && r.f1_macro == self.f1_macro && r.k_micro == self.k_micro && r.k_macro == self.k_macro
        })
    }

    /// Value of one of the four aggregates.
    pub fn value(&self, measure: Measure, micro: bool) -> f64 {
        match (measure, micro) {
            (Measure::F1, true) => self.f1_micro,
            (Measure::F1, false) => self.f1_macro,
            (Measure::K, true) => self.k_micro,
            (Measure::K, false) => self.k_macro,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ls(v: &[usize]) -> LabelSet {
        LabelSet::new(v.to_vec())
    }

    #[test]
    fn f1_cases() {
        assert_eq!(f1(&ConfusionCounts::new(0, 0, 0, 50)), 1.0);
        assert!((f1(&ConfusionCounts::new(10, 5, 5, 0)) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f1(&ConfusionCounts::new(0, 3, 2, 10)), 0.0);
    }

    #[test]
    fn k_cases() {
        assert_eq!(k_measure(&ConfusionCounts::new(5, 0, 0, 7)), 1.0);
        assert_eq!(k_measure(&ConfusionCounts::new(1, 1, 1, 1)), 0.0);
        assert!((k_measure(&ConfusionCounts::new(0, 2, 0, 8)) - 0.6).abs() < 1e-15);
        assert_eq!(k_measure(&ConfusionCounts::new(3, 0, 1, 0)), 0.5);
        assert_eq!(k_measure(&ConfusionCounts::default()), 0.0);
    }

    #[test]
    fn confusion_by_hand() {
        // Three documents over two classes, enumerated by hand.
        let gold = [ls(&[0]), ls(&[0, 1]), ls(&[])];
        let pred = [ls(&[0, 1]), ls(&[1]), ls(&[0])];
        let c = confusion(&gold, &pred, 2).unwrap();
        assert_eq!(c[0], ConfusionCounts::new(1, 1, 1, 0));
        assert_eq!(c[1], ConfusionCounts::new(1, 1, 0, 1));
        assert!(c.iter().all(|x| x.total() == 3));
    }

    #[test]
    fn confusion_identity_and_empty_predictions() {
        let gold = [ls(&[0, 2]), ls(&[1]), ls(&[2])];
        assert!(confusion(&gold, &gold, 3).unwrap().iter().all(|c| c.fp == 0 && c.fn_ == 0));
        let none = [ls(&[]), ls(&[]), ls(&[])];
        let c = confusion(&gold, &none, 3).unwrap();
        assert_eq!(c.iter().map(|c| c.fn_).collect::<Vec<_>>(), [1, 1, 2]);
        assert!(c.iter().all(|c| c.tp == 0 && c.fp == 0));
        assert!(confusion(&gold, &none[..2], 3).is_err());
    }

    #[test]
    fn aggregation() {
        let one = [ConfusionCounts::new(3, 1, 2, 4)];
        let (mi, ma) = micro_macro_aggregate(&one, Measure::F1).unwrap();
        assert_eq!(mi, ma);
        let two = [ConfusionCounts::new(10, 0, 0, 0), ConfusionCounts::new(0, 0, 0, 10)];
        assert_eq!(micro_macro_aggregate(&two, Measure::F1).unwrap(), (1.0, 1.0));
        assert!(micro_macro_aggregate(&[], Measure::K).is_err());
    }

    #[test]
    fn report_is_consistent() {
        let r = EvalReport::from_counts(RunMeta::default(), vec![ConfusionCounts::new(2, 1, 0, 3)]).unwrap();
        assert!(r.is_consistent());
        let mut bad = r.clone();
        bad.f1_macro = 0.1;
        assert!(!bad.is_consistent());
    }
}
