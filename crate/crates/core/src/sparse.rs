//! Sparse real vectors over a language-specific feature space.

use alloc::format;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Index/weight pairs with strictly increasing indices and finite weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    /// Builds a vector from `(index, weight)` entries that must already be in
    /// strictly increasing index order.
    pub fn new(entries: Vec<(u32, f64)>) -> Result<Self> {
        let mut indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (i, (idx, w)) in entries.into_iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::InvalidVector(format!("non-finite weight at feature {idx}")));
            }
            if i > 0 && idx <= indices[i - 1] {
                return Err(Error::InvalidVector(format!(
                    "feature indices not strictly increasing ({} then {idx})",
                    indices[i - 1]
                )));
            }
            indices.push(idx);
            values.push(w);
        }
        Ok(Self { indices, values })
    }

    /// Builds a vector from entries in any order, summing duplicates.
    pub fn from_unsorted(mut entries: Vec<(u32, f64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (idx, w) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == idx => last.1 += w,
                _ => merged.push((idx, w)),
            }
        }
        Self::new(merged)
    }

    pub fn zeros() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// Largest stored index, if any.
    pub fn max_index(&self) -> Option<u32> {
        self.indices.last().copied()
    }

    pub fn norm(&self) -> f64 {
        math::norm(&self.values)
    }

    /// Dot product with a dense vector; indices beyond `dense` contribute 0.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.iter()
            .map(|(i, v)| dense.get(i as usize).map_or(0.0, |w| w * v))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_out_of_order_and_duplicates() {
        assert!(SparseVector::new(vec![(5, 0.1), (3, 0.2)]).is_err());
        assert!(SparseVector::new(vec![(3, 0.1), (3, 0.2)]).is_err());
        assert!(SparseVector::new(vec![(3, f64::NAN)]).is_err());
        assert!(SparseVector::new(vec![(0, 0.5), (7, 0.25)]).is_ok());
    }

    #[test]
    fn from_unsorted_merges() {
        let v = SparseVector::from_unsorted(vec![(4, 1.0), (1, 2.0), (4, 3.0)]).unwrap();
        assert_eq!(v.indices(), &[1, 4]);
        assert_eq!(v.values(), &[2.0, 4.0]);
    }

    #[test]
    fn dot_ignores_out_of_range() {
        let v = SparseVector::new(vec![(0, 2.0), (9, 5.0)]).unwrap();
        assert_eq!(v.dot_dense(&[3.0, 1.0]), 6.0);
    }
}
