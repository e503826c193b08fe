use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::calibrate::{CalibrationMode, NoCalibReading};
use crate::learn::{TrainConfig, DEFAULT_GRID};
use crate::{Error, Result};

/// How meta-training vectors are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Re-score each training document with its language's full classifier.
    Tat,
    /// Score each training document with a classifier trained on the other folds.
    Kfcv,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Tat => "tat",
            Variant::Kfcv => "kfcv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum MetaLearner {
    /// Logistic regression on random Fourier features of the posterior vector.
    /// `gamma` defaults to 1/|C|.
    Rbf { dimension: usize, gamma: Option<f64> },
    /// Logistic regression on the posterior vector itself.
    Linear,
}

/// What to do with a language whose training set is empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmptyLanguagePolicy {
    #[default]
    Reject,
    /// Keep the language with an all-rejecting tier-1 classifier.
    TrivialRejector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FunnelConfig {
    pub variant: Variant,
    pub mode: CalibrationMode,
    pub nocalib_reading: NoCalibReading,
    /// Folds for [`Variant::Kfcv`].
    pub k: usize,
    /// Base classifiers (tier-1 and the shared-space classifier).
    pub base: TrainConfig,
    pub meta: MetaLearner,
    pub meta_tolerance: f64,
    pub grid: Vec<f64>,
    pub grid_folds: usize,
    /// Internal folds producing the out-of-sample scores that [`Variant::Tat`]
    /// calibrators are fit on; 0 fits them on the training scores themselves.
    pub calibration_folds: usize,
    pub empty_language: EmptyLanguagePolicy,
    pub seed: u64,
}

impl Default for FunnelConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Tat,
            mode: CalibrationMode::Calib,
            nocalib_reading: NoCalibReading::Printed,
            k: 10,
            base: TrainConfig::default(),
            meta: MetaLearner::Rbf { dimension: 300, gamma: None },
            meta_tolerance: 1e-4,
            grid: DEFAULT_GRID.to_vec(),
            grid_folds: 5,
            calibration_folds: 0,
            empty_language: EmptyLanguagePolicy::Reject,
            seed: 0,
        }
    }
}

impl FunnelConfig {
    pub fn tat() -> Self {
        Self::default()
    }

    pub fn kfcv(k: usize) -> Self {
        Self { variant: Variant::Kfcv, k, ..Self::default() }
    }

    pub fn with_mode(mut self, mode: CalibrationMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.base.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.variant == Variant::Kfcv && self.k < 2 {
            return Err(Error::InvalidConfig { field: "k", reason: format!("{} folds; need at least 2", self.k) });
        }
        if self.calibration_folds == 1 {
            return Err(Error::InvalidConfig { field: "calibration_folds", reason: "use 0 (in-sample) or at least 2".into() });
        }
        if self.grid_folds < 2 {
            return Err(Error::InvalidConfig { field: "grid_folds", reason: "need at least 2".into() });
        }
        if self.grid.is_empty() || self.grid.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidConfig { field: "grid", reason: "values must be finite and > 0".into() });
        }
        if self.meta_tolerance.is_nan() || self.meta_tolerance <= 0.0 {
            return Err(Error::InvalidConfig { field: "meta_tolerance", reason: "must be > 0".into() });
        }
        if let MetaLearner::Rbf { dimension, gamma } = self.meta {
            if dimension == 0 {
                return Err(Error::InvalidConfig { field: "meta.dimension", reason: "must be >= 1".into() });
            }
            if let Some(g) = gamma {
                if !(g > 0.0 && g.is_finite()) {
                    return Err(Error::InvalidConfig { field: "meta.gamma", reason: format!("{g} must be > 0") });
                }
            }
        }
        Ok(())
    }

    pub(crate) fn meta_train_config(&self) -> TrainConfig {
        TrainConfig { tolerance: self.meta_tolerance, ..self.base }
    }
}
