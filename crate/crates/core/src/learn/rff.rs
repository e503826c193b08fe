use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::rows::DenseMatrix;
use crate::{math, rng};
use crate::{Error, Result};

/// Random Fourier features approximating the RBF kernel exp(−γ‖x − y‖²).
///
/// z(x) = √(2/D) · cos(Wx + b), rows of W drawn from N(0, 2γ·I) and b from
/// U[0, 2π), both fixed by the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfFeatureMap {
    input_dim: usize,
    output_dim: usize,
    gamma: f64,
    seed: u64,
    weights: Vec<f64>,
    offsets: Vec<f64>,
}

impl RbfFeatureMap {
    pub fn new(input_dim: usize, output_dim: usize, gamma: f64, seed: u64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidConfig { field: "gamma", reason: format!("{gamma} must be > 0") });
        }
        if output_dim == 0 {
            return Err(Error::InvalidConfig { field: "output_dim", reason: "must be >= 1".into() });
        }
        let mut r = rng::stream(seed, 0x4ff);
        let sd = math::sqrt(2.0 * gamma);
        let weights = (0..input_dim * output_dim).map(|_| sd * rng::normal(&mut r)).collect();
        let offsets = (0..output_dim).map(|_| math::TAU * rng::uniform(&mut r)).collect();
        Ok(Self { input_dim, output_dim, gamma, seed, weights, offsets })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn map(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, found: x.len() });
        }
        let scale = math::sqrt(2.0 / self.output_dim as f64);
        Ok(self
            .weights
            .chunks_exact(self.input_dim.max(1))
            .take(self.output_dim)
            .zip(&self.offsets)
            .map(|(w, b)| {
                let proj = if self.input_dim == 0 { 0.0 } else { math::dot(w, x) };
                scale * math::cos(proj + b)
            })
            .collect())
    }

    pub fn map_all<'a>(&self, xs: impl IntoIterator<Item = &'a [f64]>) -> Result<DenseMatrix> {
        let mut m = DenseMatrix::new(self.output_dim);
        for x in xs {
            m.push(&self.map(x)?);
        }
        Ok(m)
    }
}

/// Maps `x` with a freshly drawn map of `output_dim` features.
pub fn rbf_feature_map(x: &[f64], output_dim: usize, gamma: f64, seed: u64) -> Result<Vec<f64>> {
    RbfFeatureMap::new(x.len(), output_dim, gamma, seed)?.map(x)
}
