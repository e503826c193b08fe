//! L2-regularized logistic regression trained by L-BFGS with backtracking
//! (Armijo) line search.
//!
//! Objective over parameters θ = (w, b), labels s ∈ {−1, +1}:
//!
//! ```text
//! J(w, b) = ‖w‖² / (2C) + Σᵢ ln(1 + exp(−sᵢ (w·xᵢ + b)))
//! ```
//!
//! The bias is not regularized. The raw score of a trained scorer is the
//! log-odds `w·x + b`.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::rows::{Row, Rows};
use crate::math;
use crate::{Error, Result};

const HISTORY: usize = 10;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Inverse regularization strength C.
    pub reg_strength: f64,
    /// Stop when the gradient norm falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { reg_strength: 1.0, tolerance: 1e-6, max_iterations: 1000, seed: 0 }
    }
}

impl TrainConfig {
    pub fn with_reg_strength(mut self, c: f64) -> Self {
        self.reg_strength = c;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reg_strength > 0.0 && self.reg_strength.is_finite()) {
            return Err(Error::InvalidConfig { field: "reg_strength", reason: format!("{} must be > 0", self.reg_strength) });
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidConfig { field: "tolerance", reason: format!("{} must be > 0", self.tolerance) });
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig { field: "max_iterations", reason: "must be >= 1".into() });
        }
        Ok(())
    }
}

/// A linear decision function. Trivial rejectors score exactly 0 everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryScorer {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub is_trivial_rejector: bool,
}

impl BinaryScorer {
    pub fn trivial_rejector() -> Self {
        Self { weights: Vec::new(), bias: 0.0, is_trivial_rejector: true }
    }

    /// Scorer that ignores its input and returns `score`.
    pub fn constant(score: f64) -> Self {
        Self { weights: Vec::new(), bias: score, is_trivial_rejector: false }
    }

    pub fn score<X: Row + ?Sized>(&self, x: &X) -> f64 {
        if self.is_trivial_rejector {
            0.0
        } else {
            x.dot(&self.weights) + self.bias
        }
    }

    /// Positive decision: non-trivial scorer with raw score ≥ 0.
    pub fn decide<X: Row + ?Sized>(&self, x: &X) -> bool {
        !self.is_trivial_rejector && self.score(x) >= 0.0
    }
}

/// weights·x + bias, or 0 for a trivial rejector.
pub fn raw_score<X: Row + ?Sized>(scorer: &BinaryScorer, x: &X) -> f64 {
    scorer.score(x)
}

#[inline]
fn sign(y: bool) -> f64 {
    if y {
        1.0
    } else {
        -1.0
    }
}

/// Margins zᵢ = w·xᵢ + b for parameters θ = (w, b).
fn margins<R: Rows + ?Sized>(rows: &R, theta: &[f64]) -> Vec<f64> {
    let (w, b) = theta.split_at(rows.dim());
    (0..rows.len()).map(|i| rows.row(i).dot(w) + b[0]).collect()
}

fn value_from_margins(theta: &[f64], dim: usize, y: &[bool], z: &[f64], c: f64) -> f64 {
    let reg = math::dot(&theta[..dim], &theta[..dim]) / (2.0 * c);
    let loss: f64 = z.iter().zip(y).map(|(zi, &yi)| math::softplus(-sign(yi) * zi)).sum();
    reg + loss
}

fn gradient_from_margins<R: Rows + ?Sized>(rows: &R, theta: &[f64], y: &[bool], z: &[f64], c: f64) -> Vec<f64> {
    let dim = rows.dim();
    let mut g = vec![0.0; dim + 1];
    for (gw, w) in g[..dim].iter_mut().zip(&theta[..dim]) {
        *gw = w / c;
    }
    let mut gb = 0.0;
    for (i, (&zi, &yi)) in z.iter().zip(y).enumerate() {
        let s = sign(yi);
        // d/dz softplus(−s z) = −s σ(−s z)
        let coef = -s * math::sigmoid(-s * zi);
        if coef != 0.0 {
            rows.row(i).axpy(coef, &mut g[..dim]);
        }
        gb += coef;
    }
    g[dim] = gb;
    g
}

/// Regularized logistic objective at θ = (w, b).
pub fn objective<R: Rows + ?Sized>(rows: &R, y: &[bool], reg_strength: f64, theta: &[f64]) -> f64 {
    let z = margins(rows, theta);
    value_from_margins(theta, rows.dim(), y, &z, reg_strength)
}

/// Objective and its analytic gradient at θ = (w, b).
pub fn objective_and_gradient<R: Rows + ?Sized>(
    rows: &R,
    y: &[bool],
    reg_strength: f64,
    theta: &[f64],
) -> (f64, Vec<f64>) {
    let z = margins(rows, theta);
    let f = value_from_margins(theta, rows.dim(), y, &z, reg_strength);
    (f, gradient_from_margins(rows, theta, y, &z, reg_strength))
}

/// Minimizes the regularized logistic objective.
///
/// Requires at least one positive and one negative label; callers build
/// trivial or constant scorers for single-class problems.
pub fn train_binary<R: Rows + ?Sized>(rows: &R, y: &[bool], cfg: &TrainConfig) -> Result<BinaryScorer> {
    train_binary_from(rows, y, cfg, None)
}

/// [`train_binary`] starting from `init` instead of the zero vector.
///
/// Non-trivial starting points of the right dimension are used as given;
/// anything else falls back to the zero vector.
pub fn train_binary_from<R: Rows + ?Sized>(
    rows: &R,
    y: &[bool],
    cfg: &TrainConfig,
    init: Option<&BinaryScorer>,
) -> Result<BinaryScorer> {
    cfg.validate()?;
    if rows.len() != y.len() {
        return Err(Error::LengthMismatch { left: rows.len(), right: y.len() });
    }
    if rows.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, found: 0 });
    }
    let positives = y.iter().filter(|&&v| v).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::SingleClass);
    }

    let dim = rows.dim();
    let c = cfg.reg_strength;
    let mut theta = match init {
        Some(s) if !s.is_trivial_rejector && s.weights.len() == dim && s.bias.is_finite() => {
            let mut t = s.weights.clone();
            t.push(s.bias);
            t
        }
        _ => vec![0.0; dim + 1],
    };
    let z = margins(rows, &theta);
    let mut f = value_from_margins(&theta, dim, y, &z, c);
    if !f.is_finite() {
        return Err(Error::NonFinite("training features"));
    }
    let mut g = gradient_from_margins(rows, &theta, y, &z, c);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training features"));
    }

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(HISTORY);
    for _ in 0..cfg.max_iterations {
        if math::norm(&g) <= cfg.tolerance {
            break;
        }
        let mut d = two_loop(&g, &history);
        let mut slope = math::dot(&g, &d);
        if slope.is_nan() || slope >= 0.0 {
            history.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -math::dot(&g, &g);
        }
        if history.is_empty() {
            // First step: unit length along the descent direction.
            let scale = 1.0 / math::norm(&d).max(1.0);
            d.iter_mut().for_each(|v| *v *= scale);
            slope *= scale;
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = theta.iter().zip(&d).map(|(t, di)| t + step * di).collect();
            let zt = margins(rows, &trial);
            let ft = value_from_margins(&trial, dim, y, &zt, c);
            if ft <= f + ARMIJO * step * slope {
                accepted = Some((trial, zt, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((next, zn, fn_)) = accepted else { break };
        let gn = gradient_from_margins(rows, &next, y, &zn, c);
        let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = math::dot(&s, &yv);
        if sy > 1e-12 * math::norm(&s) * math::norm(&yv) {
            if history.len() == HISTORY {
                history.pop_front();
            }
            history.push_back((s, yv, 1.0 / sy));
        }
        let decrease = f - fn_;
        theta = next;
        f = fn_;
        g = gn;
        if decrease <= f64::EPSILON * f.abs().max(1.0) {
            break;
        }
    }
    let bias = theta.pop().unwrap_or(0.0);
    Ok(BinaryScorer { weights: theta, bias, is_trivial_rejector: false })
}

/// L-BFGS two-loop recursion: returns −H·g.
fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * math::dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = math::dot(s, y) / math::dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * math::dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}
