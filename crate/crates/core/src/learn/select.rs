use alloc::vec;
use alloc::vec::Vec;

use super::folds::kfold_split;
use super::logistic::TrainConfig;
use super::ovr::train_multilabel_from;
use super::rows::{Rows, Subset};
use crate::corpus::LabelSet;
use crate::metrics::{confusion, micro_macro_aggregate, Measure};
use crate::{Error, Result};

/// Regularization grid {10⁻¹, 10⁰, …, 10⁴}.
pub const DEFAULT_GRID: [f64; 6] = [0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0];

/// Picks the grid value with the best mean out-of-fold micro-F1.
///
/// Folds come from `kfold_split(n, folds, cfg.seed)`; empty folds are skipped.
/// Ties go to the smallest value. With fewer than two documents no
/// cross-validation is possible and the smallest value is returned.
pub fn grid_search_reg<R: Rows + ?Sized>(
    rows: &R,
    labels: &[LabelSet],
    n_classes: usize,
    grid: &[f64],
    folds: usize,
    cfg: &TrainConfig,
) -> Result<f64> {
    let mut sorted: Vec<f64> = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let Some(&smallest) = sorted.first() else {
        return Err(Error::InvalidConfig { field: "grid", reason: "empty regularization grid".into() });
    };
    if sorted.len() == 1 || rows.len() < 2 {
        return Ok(smallest);
    }
    let plan = kfold_split(rows.len(), folds, cfg.seed)?;

    // Along each fold the grid is walked in ascending order, warm-starting
    // every fit from the previous solution.
    let mut totals = vec![0.0; sorted.len()];
    let mut used = 0usize;
    for x in 0..plan.k() {
        let held = plan.fold(x);
        if held.is_empty() {
            continue;
        }
        let train_idx = plan.complement(x);
        let train_labels: Vec<LabelSet> = train_idx.iter().map(|&i| labels[i].clone()).collect();
        let train_rows = Subset::new(rows, train_idx);
        let gold: Vec<LabelSet> = held.iter().map(|&i| labels[i].clone()).collect();
        let mut previous = None;
        for (slot, &c) in totals.iter_mut().zip(&sorted) {
            let fold_cfg = cfg.with_reg_strength(c);
            let model = train_multilabel_from(&train_rows, &train_labels, n_classes, &fold_cfg, previous.as_ref())?;
            let pred: Vec<LabelSet> = held.iter().map(|&i| model.decide(rows.row(i))).collect();
            let counts = confusion(&gold, &pred, n_classes)?;
            *slot += micro_macro_aggregate(&counts, Measure::F1)?.0;
            previous = Some(model);
        }
        used += 1;
    }
    let mut best = (f64::NEG_INFINITY, smallest);
    for (&total, &c) in totals.iter().zip(&sorted) {
        let score = total / used as f64;
        if score > best.0 {
            best = (score, c);
        }
    }
    Ok(best.1)
}
