//! Platt scaling: Pr(c | d) = 1 / (1 + exp(α·h(d, c) + β)).
//!
//! Parameters minimize the negative log-likelihood of 0/1 targets subject to
//! α ≤ 0, so calibrated probabilities never reverse the ranking of raw scores.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::{Error, Result};

const MAX_NEWTON_STEPS: usize = 200;
const GRADIENT_TOLERANCE: f64 = 1e-6;
/// β of the calibrator fitted to all-positive labels: probability ≈ 1 − 4.5e-5.
pub const ALL_POSITIVE_BETA: f64 = -10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattCalibrator {
    pub alpha: f64,
    pub beta: f64,
    /// Maps every score to exactly 0.
    pub trivial: bool,
}

impl PlattCalibrator {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta, trivial: false }
    }

    pub fn trivial() -> Self {
        Self { alpha: 0.0, beta: 0.0, trivial: true }
    }

    pub fn probability(&self, h: f64) -> f64 {
        calibrate_score(self, h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibrationMode {
    /// Platt-calibrated posteriors.
    Calib,
    /// Logistic with fixed (α, β) instead of fitted ones.
    NoCalib,
    /// Raw classification scores, no probability mapping.
    NoProb,
}

impl CalibrationMode {
    pub const ALL: [CalibrationMode; 3] = [CalibrationMode::Calib, CalibrationMode::NoCalib, CalibrationMode::NoProb];

    pub fn name(self) -> &'static str {
        match self {
            CalibrationMode::Calib => "calib",
            CalibrationMode::NoCalib => "nocalib",
            CalibrationMode::NoProb => "noprob",
        }
    }
}

/// Fixed parameters used by [`CalibrationMode::NoCalib`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoCalibReading {
    /// (α, β) = (1, 0): probability decreasing in the score.
    #[default]
    Printed,
    /// (α, β) = (−1, 0): the plain logistic sigmoid of the score.
    Monotone,
}

impl NoCalibReading {
    fn alpha(self) -> f64 {
        match self {
            NoCalibReading::Printed => 1.0,
            NoCalibReading::Monotone => -1.0,
        }
    }
}

#[inline]
fn logistic(alpha: f64, beta: f64, h: f64) -> f64 {
    // 1 / (1 + e^t) = σ(−t)
    math::sigmoid(-(alpha * h + beta))
}

/// Calibrated probability for `h`; exactly 0 for trivial calibrators.
pub fn calibrate_score(cal: &PlattCalibrator, h: f64) -> f64 {
    if cal.trivial {
        0.0
    } else {
        logistic(cal.alpha, cal.beta, h)
    }
}

/// The tier-1 feature value for score `h` under `mode`, with the printed
/// reading of the fixed NoCalib parameters.
pub fn posteriors_with_mode(mode: CalibrationMode, cal: &PlattCalibrator, h: f64) -> f64 {
    posterior_with_reading(mode, cal, h, NoCalibReading::Printed)
}

pub fn posterior_with_reading(mode: CalibrationMode, cal: &PlattCalibrator, h: f64, reading: NoCalibReading) -> f64 {
    match mode {
        CalibrationMode::Calib => calibrate_score(cal, h),
        CalibrationMode::NoCalib => logistic(reading.alpha(), 0.0, h),
        CalibrationMode::NoProb => h,
    }
}

/// Negative log-likelihood of 0/1 targets under parameters (α, β).
pub fn platt_nll(scores: &[f64], labels: &[bool], alpha: f64, beta: f64) -> f64 {
    scores
        .iter()
        .zip(labels)
        .map(|(&h, &y)| {
            let t = alpha * h + beta;
            // −ln p = softplus(t), −ln(1 − p) = softplus(t) − t
            if y {
                math::softplus(t)
            } else {
                math::softplus(t) - t
            }
        })
        .sum()
}

struct Local {
    f: f64,
    ga: f64,
    gb: f64,
    haa: f64,
    hab: f64,
    hbb: f64,
}

fn local(scores: &[f64], labels: &[bool], alpha: f64, beta: f64) -> Local {
    let mut l = Local { f: 0.0, ga: 0.0, gb: 0.0, haa: 0.0, hab: 0.0, hbb: 0.0 };
    for (&h, &y) in scores.iter().zip(labels) {
        let t = alpha * h + beta;
        let s = math::sigmoid(t);
        let target = if y { 0.0 } else { 1.0 };
        l.f += math::softplus(t) - target * t;
        let g = s - target;
        let w = s * (1.0 - s);
        l.ga += g * h;
        l.gb += g;
        l.haa += w * h * h;
        l.hab += w * h;
        l.hbb += w;
    }
    l
}

/// Fits (α, β) by projected Newton iterations with backtracking.
///
/// All-negative labels give a trivial calibrator; all-positive labels give
/// α = 0, β = [`ALL_POSITIVE_BETA`]. Samples are sorted before fitting, so the
/// result does not depend on their order.
pub fn fit_platt(scores: &[f64], labels: &[bool]) -> Result<PlattCalibrator> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch { left: scores.len(), right: labels.len() });
    }
    if scores.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, found: 0 });
    }
    if scores.iter().any(|h| !h.is_finite()) {
        return Err(Error::NonFinite("calibration scores"));
    }
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 {
        return Ok(PlattCalibrator::trivial());
    }
    if n_neg == 0 {
        return Ok(PlattCalibrator::new(0.0, ALL_POSITIVE_BETA));
    }

    let mut pairs: Vec<(f64, bool)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (h, y): (Vec<f64>, Vec<bool>) = pairs.into_iter().unzip();

    let mut alpha = 0.0;
    let mut beta = math::log((n_neg as f64 + 1.0) / (n_pos as f64 + 1.0));
    for _ in 0..MAX_NEWTON_STEPS {
        let l = local(&h, &y, alpha, beta);
        // α is pinned at its bound when the objective wants it positive.
        let pinned = alpha >= 0.0 && l.ga < 0.0;
        let projected = if pinned { l.gb.abs() } else { math::sqrt(l.ga * l.ga + l.gb * l.gb) };
        if projected <= GRADIENT_TOLERANCE {
            break;
        }
        let (da, db) = if pinned {
            (0.0, -l.gb / l.hbb.max(f64::MIN_POSITIVE))
        } else {
            newton_direction(&l)
        };
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let a = (alpha + step * da).min(0.0);
            let b = beta + step * db;
            let f = platt_nll(&h, &y, a, b);
            if f <= l.f + 1e-4 * (l.ga * (a - alpha) + l.gb * (b - beta)) {
                moved = a != alpha || b != beta;
                alpha = a;
                beta = b;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok(PlattCalibrator::new(alpha, beta))
}

fn newton_direction(l: &Local) -> (f64, f64) {
    let det = l.haa * l.hbb - l.hab * l.hab;
    let scale = l.haa * l.hbb;
    let (mut da, mut db) = if det > 1e-10 * scale && det > 0.0 {
        ((-l.hbb * l.ga + l.hab * l.gb) / det, (l.hab * l.ga - l.haa * l.gb) / det)
    } else {
        // Near rank one: scaled steepest descent, exact when the gradient
        // lies in the Hessian's range.
        let tr = (l.haa + l.hbb).max(f64::MIN_POSITIVE);
        (-l.ga / tr, -l.gb / tr)
    };
    if l.ga * da + l.gb * db >= 0.0 {
        let tr = (l.haa + l.hbb).max(f64::MIN_POSITIVE);
        da = -l.ga / tr;
        db = -l.gb / tr;
    }
    (da, db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn score_mapping() {
        let c = PlattCalibrator::new(-1.0, 0.0);
        assert_eq!(calibrate_score(&c, 0.0), 0.5);
        assert!(calibrate_score(&c, 1e6) > 1.0 - 1e-12);
        assert_eq!(calibrate_score(&PlattCalibrator::trivial(), 5.0), 0.0);
    }

    #[test]
    fn modes() {
        let c = PlattCalibrator::new(-2.0, 0.3);
        assert_eq!(posteriors_with_mode(CalibrationMode::NoProb, &c, 2.3), 2.3);
        assert_eq!(posteriors_with_mode(CalibrationMode::NoCalib, &c, 0.0), 0.5);
        assert!(posteriors_with_mode(CalibrationMode::NoCalib, &c, 3.0) < 0.5);
        assert!(posterior_with_reading(CalibrationMode::NoCalib, &c, 3.0, NoCalibReading::Monotone) > 0.5);
        assert_eq!(posteriors_with_mode(CalibrationMode::Calib, &PlattCalibrator::trivial(), 7.0), 0.0);
    }

    #[test]
    fn degenerate_label_sets() {
        assert_eq!(fit_platt(&[1.0, 2.0], &[false, false]).unwrap(), PlattCalibrator::trivial());
        let p = fit_platt(&[1.0, 2.0], &[true, true]).unwrap();
        assert_eq!((p.alpha, p.beta), (0.0, ALL_POSITIVE_BETA));
        assert!(p.probability(-3.0) > 0.9999);
        assert!(fit_platt(&[f64::NAN], &[true]).is_err());
        assert!(fit_platt(&[], &[]).is_err());
    }

    #[test]
    fn equal_scores_give_base_rate() {
        let h = vec![0.7; 10];
        let y: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        let p = fit_platt(&h, &y).unwrap();
        assert!((p.probability(0.7) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn reversed_scores_pin_alpha_at_zero() {
        // Positives score lower than negatives: the best monotone fit is flat.
        let h = [-2.0, -1.0, 1.0, 2.0, 3.0];
        let y = [true, true, false, false, false];
        let p = fit_platt(&h, &y).unwrap();
        assert_eq!(p.alpha, 0.0);
        assert!((p.probability(0.0) - 0.4).abs() < 1e-6);
    }
}
