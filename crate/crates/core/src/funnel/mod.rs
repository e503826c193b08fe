//! Two-tier funnelling: per-language base classifiers whose calibrated
//! posteriors feed one language-independent meta-classifier.
//!
//! Training is deterministic given the corpus and the [`FunnelConfig`];
//! trained models are immutable and can be shared across threads.

mod config;
mod naive;
mod predict;
mod train;
mod zeroshot;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::calibrate::PlattCalibrator;
use crate::corpus::LabelSet;
use crate::features::WeightingModel;
use crate::learn::{MultilabelClassifier, RbfFeatureMap};

pub use config::{EmptyLanguagePolicy, FunnelConfig, MetaLearner, Variant};
pub use naive::{predict_naive, train_naive, NaiveLanguage, NaiveModel};
pub use predict::{predict, predict_batch};
pub use train::{train_funnel, train_funnel_with_report, FallbackEvent, Stage, StageObserver, TrainingReport};
pub use zeroshot::{predict_zeroshot, train_zeroshot, train_zeroshot_with_report};

/// Tier-1 components of one language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tier1Language {
    pub weighting: WeightingModel,
    pub classifier: MultilabelClassifier,
    pub calibrators: Vec<PlattCalibrator>,
}

/// Tier-2 classifier over |C|-dimensional posterior vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaClassifier {
    /// `None` for the linear meta learner.
    pub feature_map: Option<RbfFeatureMap>,
    pub classifier: MultilabelClassifier,
    /// Regularization strength picked by grid search.
    pub reg_strength: f64,
}

/// Shared-space classifier over averaged word embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroShotBranch {
    pub dimension: usize,
    pub feature_map: RbfFeatureMap,
    pub classifier: MultilabelClassifier,
    pub calibrators: Vec<PlattCalibrator>,
}

/// Invocation counters, for checking which classifiers served a prediction.
#[derive(Debug, Default)]
pub struct Counters {
    tier1: AtomicU64,
    zero_shot: AtomicU64,
    tier2: AtomicU64,
}

impl Counters {
    pub fn tier1(&self) -> u64 {
        self.tier1.load(Ordering::Relaxed)
    }

    pub fn zero_shot(&self) -> u64 {
        self.zero_shot.load(Ordering::Relaxed)
    }

    pub fn tier2(&self) -> u64 {
        self.tier2.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.tier1.store(0, Ordering::Relaxed);
        self.zero_shot.store(0, Ordering::Relaxed);
        self.tier2.store(0, Ordering::Relaxed);
    }

    fn bump(counter: &AtomicU64) {
        counter.fetch_add(1, Ordering::Relaxed);
    }
}

impl Clone for Counters {
    fn clone(&self) -> Self {
        Self::default()
    }
}

impl PartialEq for Counters {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunnelModel {
    pub config: FunnelConfig,
    pub class_names: Vec<String>,
    pub tier1: BTreeMap<String, Tier1Language>,
    pub tier2: MetaClassifier,
    pub zero_shot: Option<ZeroShotBranch>,
    #[serde(skip)]
    pub counters: Counters,
}

impl FunnelModel {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.tier1.keys().map(String::as_str)
    }
}

/// Which tier-1 classifier produced a prediction's posterior vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Language(String),
    ZeroShot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub doc_id: String,
    /// Tier-1 output, one value per class.
    pub posterior: Vec<f64>,
    /// Tier-2 output.
    pub decisions: LabelSet,
    pub route: Route,
}
