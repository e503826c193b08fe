use alloc::vec::Vec;

use crate::math;
use crate::sparse::SparseVector;

/// A feature vector a linear model can score and accumulate gradients from.
pub trait Row: Sync {
    fn dot(&self, w: &[f64]) -> f64;
    /// out += a · self
    fn axpy(&self, a: f64, out: &mut [f64]);
}

impl Row for SparseVector {
    #[inline]
    fn dot(&self, w: &[f64]) -> f64 {
        self.dot_dense(w)
    }

    #[inline]
    fn axpy(&self, a: f64, out: &mut [f64]) {
        for (i, v) in self.iter() {
            if let Some(o) = out.get_mut(i as usize) {
                *o += a * v;
            }
        }
    }
}

impl Row for [f64] {
    #[inline]
    fn dot(&self, w: &[f64]) -> f64 {
        math::dot(self, w)
    }

    #[inline]
    fn axpy(&self, a: f64, out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(self) {
            *o += a * v;
        }
    }
}

/// A design matrix: `len()` rows of dimension `dim()`.
pub trait Rows: Sync {
    type Row: Row + ?Sized;
    fn len(&self) -> usize;
    fn dim(&self) -> usize;
    fn row(&self, i: usize) -> &Self::Row;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Borrowed sparse rows over a feature space of size `dim`.
#[derive(Debug, Clone)]
pub struct SparseRows<'a> {
    rows: Vec<&'a SparseVector>,
    dim: usize,
}

impl<'a> SparseRows<'a> {
    pub fn new(rows: Vec<&'a SparseVector>, dim: usize) -> Self {
        Self { rows, dim }
    }
}

impl Rows for SparseRows<'_> {
    type Row = SparseVector;
    fn len(&self) -> usize {
        self.rows.len()
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn row(&self, i: usize) -> &SparseVector {
        self.rows[i]
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DenseMatrix {
    data: Vec<f64>,
    dim: usize,
}

impl DenseMatrix {
    pub fn new(dim: usize) -> Self {
        Self { data: Vec::new(), dim }
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Self {
        let mut m = Self::new(dim);
        for r in rows {
            m.push(r);
        }
        m
    }

    /// Appends a row; panics if its length differs from `dim`.
    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.dim, "row dimension");
        self.data.extend_from_slice(row);
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1)).take(self.len())
    }
}

impl Rows for DenseMatrix {
    type Row = [f64];
    fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// The rows of `inner` at positions `index`, in that order.
#[derive(Debug, Clone)]
pub struct Subset<'a, R: ?Sized> {
    inner: &'a R,
    index: Vec<usize>,
}

impl<'a, R: Rows + ?Sized> Subset<'a, R> {
    pub fn new(inner: &'a R, index: Vec<usize>) -> Self {
        Self { inner, index }
    }
}

impl<R: Rows + ?Sized> Rows for Subset<'_, R> {
    type Row = R::Row;
    fn len(&self) -> usize {
        self.index.len()
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn row(&self, i: usize) -> &R::Row {
        self.inner.row(self.index[i])
    }
}
