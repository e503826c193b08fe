use alloc::format;
use alloc::vec::Vec;

use crate::rng;
use crate::{Error, Result};

/// Assignment of document positions to `k` folds of near-equal size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    k: usize,
    assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Number of non-empty folds, min(k, n).
    pub fn effective_k(&self) -> usize {
        self.k.min(self.assignment.len())
    }

    /// Positions held out in fold `x`, ascending.
    pub fn fold(&self, x: usize) -> Vec<usize> {
        self.positions(|f| f == x)
    }

    /// Positions outside fold `x`, ascending.
    pub fn complement(&self, x: usize) -> Vec<usize> {
        self.positions(|f| f != x)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }

    fn positions(&self, keep: impl Fn(usize) -> bool) -> Vec<usize> {
        self.assignment.iter().enumerate().filter(|(_, &f)| keep(f)).map(|(i, _)| i).collect()
    }
}

/// Non-stratified k-fold split of `n` positions.
///
/// A seeded permutation deals positions round-robin, so fold sizes differ by
/// at most one. With `n < k` the trailing folds are empty.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidConfig { field: "k", reason: format!("{k} folds; need at least 2") });
    }
    let mut r = rng::stream(seed, 0xf01d);
    let perm = rng::permutation(n, &mut r);
    let mut assignment = alloc::vec![0; n];
    for (rank, &pos) in perm.iter().enumerate() {
        assignment[pos] = rank % k;
    }
    Ok(FoldPlan { k, assignment })
}
