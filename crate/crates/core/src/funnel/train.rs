use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::config::{EmptyLanguagePolicy, FunnelConfig, MetaLearner, Variant};
use super::{Counters, FunnelModel, MetaClassifier, Tier1Language};
use crate::calibrate::{fit_platt, posterior_with_reading, PlattCalibrator};
use crate::corpus::{LabelSet, LanguageDataset, MultilingualCorpus};
use crate::features::{fit_weighting, transform, WeightingModel};
use crate::learn::{
    grid_search_reg, kfold_split, train_multilabel, DenseMatrix, FoldPlan, MultilabelClassifier, RbfFeatureMap,
    Rows, SparseRows, Subset, TrainConfig,
};
use crate::{par, rng};
use crate::{Error, Result};

/// Training phases reported to a [`StageObserver`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Weighting and full-training base classifiers.
    Tier1,
    /// Out-of-sample scoring, calibrators and meta-training vectors.
    Calibration,
    Tier2,
}

pub trait StageObserver {
    fn stage_started(&mut self, _stage: Stage) {}
    fn stage_finished(&mut self, _stage: Stage) {}
}

impl StageObserver for () {}

/// A (language, fold, class) whose fold classifier was replaced by the
/// full-training one because the class has no positives outside the fold.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FallbackEvent {
    pub language: String,
    pub fold: usize,
    pub class: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub meta_rows: usize,
    pub meta_columns: usize,
    /// Training-set size of every fold classifier, per language.
    pub fold_train_sizes: BTreeMap<String, Vec<usize>>,
    /// Fold of every training document, in doc-id order, per language.
    pub fold_assignments: BTreeMap<String, Vec<usize>>,
    /// Number of per-fold calibrator sets fit (one per language and fold).
    pub fold_calibrator_sets: usize,
    pub fallbacks: Vec<FallbackEvent>,
    pub meta_reg_strength: f64,
}

/// One language's training data in canonical (doc id) order.
pub(super) struct LanguageData {
    pub language: String,
    pub weighted: Vec<crate::SparseVector>,
    pub labels: Vec<LabelSet>,
    pub weighting: WeightingModel,
    pub dim: usize,
}

impl LanguageData {
    pub fn rows(&self) -> SparseRows<'_> {
        SparseRows::new(self.weighted.iter().collect(), self.dim)
    }
}

pub(super) fn prepare_language(ds: &LanguageDataset, policy: EmptyLanguagePolicy) -> Result<LanguageData> {
    let weighting = if ds.is_empty() {
        match policy {
            EmptyLanguagePolicy::Reject => return Err(Error::EmptyTrainingSet(ds.language().into())),
            EmptyLanguagePolicy::TrivialRejector => WeightingModel::annihilating(ds.language(), ds.vocabulary_size()),
        }
    } else {
        fit_weighting(ds)?
    };
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let docs = ds.documents();
    order.sort_by(|&a, &b| docs[a].id.cmp(&docs[b].id));
    let weighted = order.iter().map(|&i| transform(&weighting, &docs[i].vector)).collect::<Result<Vec<_>>>()?;
    Ok(LanguageData {
        language: ds.language().into(),
        weighted,
        labels: order.iter().map(|&i| docs[i].labels.clone()).collect(),
        weighting,
        dim: ds.vocabulary_size(),
    })
}

pub(super) fn check_corpus(corpus: &MultilingualCorpus, cfg: &FunnelConfig) -> Result<()> {
    cfg.validate()?;
    if corpus.train().is_empty() {
        return Err(Error::InvalidConfig { field: "corpus", reason: "no training languages".into() });
    }
    if corpus.n_classes() == 0 {
        return Err(Error::InvalidConfig { field: "class_names", reason: "empty class inventory".into() });
    }
    Ok(())
}

/// The tier-1 feature value of one class; trivial rejectors give exactly 0
/// under every mode.
pub(super) fn posterior_value(cfg: &FunnelConfig, trivial: bool, cal: &PlattCalibrator, h: f64) -> f64 {
    if trivial {
        0.0
    } else {
        posterior_with_reading(cfg.mode, cal, h, cfg.nocalib_reading)
    }
}

pub(super) fn posterior_vector(
    cfg: &FunnelConfig,
    classifier: &MultilabelClassifier,
    calibrators: &[PlattCalibrator],
    scores: &[f64],
) -> Vec<f64> {
    scores
        .iter()
        .enumerate()
        .map(|(c, &h)| posterior_value(cfg, classifier.is_trivial(c), &calibrators[c], h))
        .collect()
}

/// Out-of-fold score vectors, the fold classifiers, and the (fold, class)
/// pairs that fell back to the full scorer.
type OutOfFold = (Vec<Vec<f64>>, Vec<MultilabelClassifier>, Vec<(usize, usize)>);

/// Out-of-fold scores of every document under `plan`.
///
/// A class with positives in the language but none outside fold `x` keeps
/// the full-training scorer in fold `x`; each such case is reported.
pub(super) fn out_of_fold<R: Rows + ?Sized>(
    rows: &R,
    labels: &[LabelSet],
    full: &MultilabelClassifier,
    plan: &FoldPlan,
    cfg: &TrainConfig,
) -> Result<OutOfFold> {
    let n_classes = full.n_classes();
    let totals: Vec<usize> = (0..n_classes).map(|c| labels.iter().filter(|l| l.contains(c)).count()).collect();
    let mut scores = vec![Vec::new(); rows.len()];
    let mut models = Vec::with_capacity(plan.k());
    let mut fallbacks = Vec::new();
    for x in 0..plan.k() {
        let train_idx = plan.complement(x);
        let train_labels: Vec<LabelSet> = train_idx.iter().map(|&i| labels[i].clone()).collect();
        let mut model = train_multilabel(&Subset::new(rows, train_idx), &train_labels, n_classes, cfg)?;
        for (c, &total) in totals.iter().enumerate() {
            let outside = train_labels.iter().filter(|l| l.contains(c)).count();
            if outside == 0 && total > 0 {
                model.scorers[c] = full.scorers[c].clone();
                fallbacks.push((x, c));
            }
        }
        for i in plan.fold(x) {
            scores[i] = model.scores(rows.row(i));
        }
        models.push(model);
    }
    Ok((scores, models, fallbacks))
}

/// Platt calibrators per class from (score, label) pairs of `docs`.
pub(super) fn fit_calibrators(
    classifier: &MultilabelClassifier,
    scores: &[Vec<f64>],
    labels: &[LabelSet],
    docs: &[usize],
) -> Result<Vec<PlattCalibrator>> {
    (0..classifier.n_classes())
        .map(|c| {
            if classifier.is_trivial(c) || docs.is_empty() {
                return Ok(PlattCalibrator::trivial());
            }
            let h: Vec<f64> = docs.iter().map(|&i| scores[i][c]).collect();
            let y: Vec<bool> = docs.iter().map(|&i| labels[i].contains(c)).collect();
            fit_platt(&h, &y)
        })
        .collect()
}

pub(super) fn language_seed(cfg: &FunnelConfig, language: &str, tag: u64) -> u64 {
    cfg.seed ^ rng::tag_of(language).rotate_left(17) ^ tag
}

/// Tier-1 model of one language plus its meta-training vectors.
pub(super) struct LanguageOutcome {
    pub tier1: Tier1Language,
    pub meta_vectors: Vec<Vec<f64>>,
    pub fold_train_sizes: Vec<usize>,
    pub fold_assignment: Vec<usize>,
    pub fold_calibrator_sets: usize,
    pub fallbacks: Vec<(usize, usize)>,
}

fn fit_full(data: &LanguageData, n_classes: usize, cfg: &FunnelConfig) -> Result<MultilabelClassifier> {
    if data.weighted.is_empty() {
        return Ok(MultilabelClassifier::all_trivial(n_classes));
    }
    train_multilabel(&data.rows(), &data.labels, n_classes, &cfg.base)
}

fn calibrate_language(data: &LanguageData, full: MultilabelClassifier, cfg: &FunnelConfig) -> Result<LanguageOutcome> {
    let n = data.weighted.len();
    let rows = data.rows();
    let all: Vec<usize> = (0..n).collect();
    let n_classes = full.n_classes();
    if n == 0 {
        return Ok(LanguageOutcome {
            tier1: Tier1Language {
                weighting: data.weighting.clone(),
                calibrators: vec![PlattCalibrator::trivial(); n_classes],
                classifier: full,
            },
            meta_vectors: Vec::new(),
            fold_train_sizes: Vec::new(),
            fold_assignment: Vec::new(),
            fold_calibrator_sets: 0,
            fallbacks: Vec::new(),
        });
    }
    match cfg.variant {
        Variant::Tat => {
            let folds = cfg.calibration_folds.min(n.max(2));
            let calibrators = if n < 2 || cfg.calibration_folds == 0 {
                let scores: Vec<Vec<f64>> = (0..n).map(|i| full.scores(rows.row(i))).collect();
                fit_calibrators(&full, &scores, &data.labels, &all)?
            } else {
                let plan = kfold_split(n, folds, language_seed(cfg, &data.language, 0xca1))?;
                let (oof, _, _) = out_of_fold(&rows, &data.labels, &full, &plan, &cfg.base)?;
                fit_calibrators(&full, &oof, &data.labels, &all)?
            };
            let meta_vectors =
                (0..n).map(|i| posterior_vector(cfg, &full, &calibrators, &full.scores(rows.row(i)))).collect();
            Ok(LanguageOutcome {
                tier1: Tier1Language { weighting: data.weighting.clone(), classifier: full, calibrators },
                meta_vectors,
                fold_train_sizes: Vec::new(),
                fold_assignment: Vec::new(),
                fold_calibrator_sets: 0,
                fallbacks: Vec::new(),
            })
        }
        Variant::Kfcv => {
            let plan = kfold_split(n, cfg.k, language_seed(cfg, &data.language, 0xcf))?;
            let (oof, models, fallbacks) = out_of_fold(&rows, &data.labels, &full, &plan, &cfg.base)?;
            let mut meta_vectors = vec![Vec::new(); n];
            let mut fold_train_sizes = Vec::new();
            let mut sets = 0;
            for (x, model) in models.iter().enumerate() {
                let fold = plan.fold(x);
                if fold.is_empty() {
                    continue;
                }
                fold_train_sizes.push(n - fold.len());
                let fold_cals = fit_calibrators(model, &oof, &data.labels, &fold)?;
                sets += 1;
                for &i in &fold {
                    meta_vectors[i] = posterior_vector(cfg, model, &fold_cals, &oof[i]);
                }
            }
            let calibrators = fit_calibrators(&full, &oof, &data.labels, &all)?;
            Ok(LanguageOutcome {
                tier1: Tier1Language { weighting: data.weighting.clone(), classifier: full, calibrators },
                meta_vectors,
                fold_train_sizes,
                fold_assignment: plan.assignment().to_vec(),
                fold_calibrator_sets: sets,
                fallbacks,
            })
        }
    }
}

/// Maps posterior vectors into the meta learner's input space.
pub(super) fn meta_inputs(feature_map: Option<&RbfFeatureMap>, vectors: &[Vec<f64>], dim: usize) -> Result<DenseMatrix> {
    match feature_map {
        Some(map) => map.map_all(vectors.iter().map(Vec::as_slice)),
        None => Ok(DenseMatrix::from_rows(dim, vectors)),
    }
}

pub(super) fn train_meta(
    vectors: &[Vec<f64>],
    labels: &[LabelSet],
    n_classes: usize,
    cfg: &FunnelConfig,
) -> Result<MetaClassifier> {
    let feature_map = match cfg.meta {
        MetaLearner::Rbf { dimension, gamma } => Some(RbfFeatureMap::new(
            n_classes,
            dimension,
            gamma.unwrap_or(1.0 / n_classes as f64),
            cfg.seed ^ 0x3e7a,
        )?),
        MetaLearner::Linear => None,
    };
    let x = meta_inputs(feature_map.as_ref(), vectors, n_classes)?;
    let tcfg = cfg.meta_train_config();
    let reg = grid_search_reg(&x, labels, n_classes, &cfg.grid, cfg.grid_folds, &tcfg)?;
    let classifier = train_multilabel(&x, labels, n_classes, &tcfg.with_reg_strength(reg))?;
    Ok(MetaClassifier { feature_map, classifier, reg_strength: reg })
}

pub(super) struct Tier1Outcome {
    pub tier1: BTreeMap<String, Tier1Language>,
    pub vectors: Vec<Vec<f64>>,
    pub labels: Vec<LabelSet>,
    pub data: Vec<LanguageData>,
    pub report: TrainingReport,
}

pub(super) fn train_tier1(
    corpus: &MultilingualCorpus,
    cfg: &FunnelConfig,
    observer: &mut dyn StageObserver,
) -> Result<Tier1Outcome> {
    let n_classes = corpus.n_classes();
    let datasets: Vec<&LanguageDataset> = corpus.train().values().collect();

    observer.stage_started(Stage::Tier1);
    let data = par::map_indexed(datasets.len(), |i| prepare_language(datasets[i], cfg.empty_language))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let full = par::map_indexed(data.len(), |i| fit_full(&data[i], n_classes, cfg))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    observer.stage_finished(Stage::Tier1);

    observer.stage_started(Stage::Calibration);
    let outcomes = par::map_indexed(data.len(), |i| calibrate_language(&data[i], full[i].clone(), cfg))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    observer.stage_finished(Stage::Calibration);

    let mut report = TrainingReport::default();
    let mut tier1 = BTreeMap::new();
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    for (d, o) in data.iter().zip(outcomes) {
        vectors.extend(o.meta_vectors);
        labels.extend(d.labels.iter().cloned());
        if cfg.variant == Variant::Kfcv {
            report.fold_train_sizes.insert(d.language.clone(), o.fold_train_sizes);
            report.fold_assignments.insert(d.language.clone(), o.fold_assignment);
        }
        report.fold_calibrator_sets += o.fold_calibrator_sets;
        report.fallbacks.extend(
            o.fallbacks.into_iter().map(|(fold, class)| FallbackEvent { language: d.language.clone(), fold, class }),
        );
        tier1.insert(d.language.clone(), o.tier1);
    }
    Ok(Tier1Outcome { tier1, vectors, labels, data, report })
}

/// Trains a funnelling model; see [`train_funnel_with_report`].
pub fn train_funnel(corpus: &MultilingualCorpus, cfg: &FunnelConfig) -> Result<FunnelModel> {
    train_funnel_with_report(corpus, cfg, &mut ()).map(|(m, _)| m)
}

/// Trains tier-1 per language, builds one meta-training vector per training
/// document (languages in id order, documents in id order within a language)
/// and trains the meta-classifier on all of them.
pub fn train_funnel_with_report(
    corpus: &MultilingualCorpus,
    cfg: &FunnelConfig,
    observer: &mut dyn StageObserver,
) -> Result<(FunnelModel, TrainingReport)> {
    check_corpus(corpus, cfg)?;
    let n_classes = corpus.n_classes();
    let Tier1Outcome { tier1, vectors, labels, mut report, .. } = train_tier1(corpus, cfg, observer)?;

    observer.stage_started(Stage::Tier2);
    let tier2 = train_meta(&vectors, &labels, n_classes, cfg)?;
    observer.stage_finished(Stage::Tier2);

    report.meta_rows = vectors.len();
    report.meta_columns = n_classes;
    report.meta_reg_strength = tier2.reg_strength;
    let model = FunnelModel {
        config: cfg.clone(),
        class_names: corpus.class_names().to_vec(),
        tier1,
        tier2,
        zero_shot: None,
        counters: Counters::default(),
    };
    Ok((model, report))
}
