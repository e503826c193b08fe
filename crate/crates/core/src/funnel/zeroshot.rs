use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::config::{FunnelConfig, MetaLearner, Variant};
use super::predict::{decide, predict};
use super::train::{
    check_corpus, fit_calibrators, out_of_fold, posterior_vector, train_meta, train_tier1, Stage,
    StageObserver, Tier1Outcome, TrainingReport,
};
use super::{Counters, FunnelModel, Prediction, Route, ZeroShotBranch};
use crate::corpus::{Document, MultilingualCorpus};
use crate::features::{embed_average, transform, EmbeddingTable, WeightingModel};
use crate::learn::{grid_search_reg, kfold_split, train_multilabel, RbfFeatureMap, Rows};
use crate::{Error, Result};

const SHARED_DIMENSION: usize = 300;

/// 1 / mean squared distance to the centroid; 1 for degenerate data.
fn data_gamma(xs: &[Vec<f64>], dim: usize) -> f64 {
    if xs.is_empty() {
        return 1.0;
    }
    let mut centroid = alloc::vec![0.0; dim];
    for x in xs {
        for (c, v) in centroid.iter_mut().zip(x) {
            *c += v / xs.len() as f64;
        }
    }
    let spread =
        xs.iter().map(|x| x.iter().zip(&centroid).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).sum::<f64>()
            / xs.len() as f64;
    if spread > 0.0 && spread.is_finite() {
        1.0 / spread
    } else {
        1.0
    }
}

pub fn train_zeroshot(
    corpus: &MultilingualCorpus,
    embeddings: &BTreeMap<String, EmbeddingTable>,
    cfg: &FunnelConfig,
) -> Result<FunnelModel> {
    train_zeroshot_with_report(corpus, embeddings, cfg, &mut ()).map(|(m, _)| m)
}

/// Funnelling with an extra shared-space classifier over tf-idf weighted
/// averages of aligned word embeddings.
///
/// Tier-1 is trained as in [`Variant::Tat`]. The meta-classifier sees every
/// training document twice: once through its language's classifier and once
/// through the shared-space classifier.
pub fn train_zeroshot_with_report(
    corpus: &MultilingualCorpus,
    embeddings: &BTreeMap<String, EmbeddingTable>,
    cfg: &FunnelConfig,
    observer: &mut dyn StageObserver,
) -> Result<(FunnelModel, TrainingReport)> {
    let cfg = FunnelConfig { variant: Variant::Tat, ..cfg.clone() };
    check_corpus(corpus, &cfg)?;
    let mut dimension = None;
    for lang in corpus.train().keys() {
        let table = embeddings.get(lang).ok_or_else(|| Error::MissingEmbeddings(lang.clone()))?;
        match dimension {
            None => dimension = Some(table.dimension()),
            Some(d) if d != table.dimension() => {
                return Err(Error::DimensionMismatch { expected: d, found: table.dimension() })
            }
            Some(_) => {}
        }
    }
    let dimension = dimension.unwrap_or(0);
    let n_classes = corpus.n_classes();

    let Tier1Outcome { tier1, mut vectors, mut labels, data, mut report } =
        train_tier1(corpus, &cfg, observer)?;

    observer.stage_started(Stage::Calibration);
    let mut shared = Vec::with_capacity(vectors.len());
    for d in &data {
        let table = &embeddings[&d.language];
        shared.extend(d.weighted.iter().map(|w| embed_average(w, table)));
    }
    let output_dim = match cfg.meta {
        MetaLearner::Rbf { dimension, .. } => dimension,
        MetaLearner::Linear => SHARED_DIMENSION,
    };
    let feature_map = RbfFeatureMap::new(dimension, output_dim, data_gamma(&shared, dimension), cfg.seed ^ 0x2e70)?;
    let z = feature_map.map_all(shared.iter().map(Vec::as_slice))?;
    let tcfg = cfg.meta_train_config();
    let reg = grid_search_reg(&z, &labels, n_classes, &cfg.grid, cfg.grid_folds, &tcfg)?;
    let zcfg = tcfg.with_reg_strength(reg);
    let classifier = train_multilabel(&z, &labels, n_classes, &zcfg)?;
    let all: Vec<usize> = (0..z.len()).collect();
    let calibrators = if z.len() >= 2 && cfg.calibration_folds >= 2 {
        let plan = kfold_split(z.len(), cfg.calibration_folds.min(z.len()), cfg.seed ^ 0x2ca1)?;
        let (oof, _, _) = out_of_fold(&z, &labels, &classifier, &plan, &zcfg)?;
        fit_calibrators(&classifier, &oof, &labels, &all)?
    } else {
        let scores: Vec<Vec<f64>> = all.iter().map(|&i| classifier.scores(z.row(i))).collect();
        fit_calibrators(&classifier, &scores, &labels, &all)?
    };
    let shared_vectors: Vec<Vec<f64>> =
        all.iter().map(|&i| posterior_vector(&cfg, &classifier, &calibrators, &classifier.scores(z.row(i)))).collect();
    observer.stage_finished(Stage::Calibration);

    vectors.extend(shared_vectors);
    labels.extend_from_within(..);
    observer.stage_started(Stage::Tier2);
    let tier2 = train_meta(&vectors, &labels, n_classes, &cfg)?;
    observer.stage_finished(Stage::Tier2);

    report.meta_rows = vectors.len();
    report.meta_columns = n_classes;
    report.meta_reg_strength = tier2.reg_strength;
    let model = FunnelModel {
        config: cfg,
        class_names: corpus.class_names().to_vec(),
        tier1,
        tier2,
        zero_shot: Some(ZeroShotBranch { dimension, feature_map, classifier, calibrators }),
        counters: Counters::default(),
    };
    Ok((model, report))
}

/// Seen languages go through [`predict`]; documents of other languages are
/// represented in the shared space using `table`, weighted by sublinear term
/// frequency alone.
pub fn predict_zeroshot(
    model: &FunnelModel,
    language: &str,
    doc: &Document,
    table: Option<&EmbeddingTable>,
) -> Result<Prediction> {
    let branch = model.zero_shot.as_ref().ok_or_else(|| Error::NoZeroShotBranch(language.into()))?;
    if model.tier1.contains_key(language) {
        return predict(model, language, doc);
    }
    let table = table.ok_or_else(|| Error::MissingEmbeddings(language.into()))?;
    if table.dimension() != branch.dimension {
        return Err(Error::DimensionMismatch { expected: branch.dimension, found: table.dimension() });
    }
    let vocabulary = doc.vector.max_index().map_or(0, |m| m as usize + 1);
    let weighted = transform(&WeightingModel::uniform(language, vocabulary), &doc.vector)?;
    let x = embed_average(&weighted, table);
    Counters::bump(&model.counters.zero_shot);
    let scores = branch.classifier.scores(branch.feature_map.map(&x)?.as_slice());
    let posterior = posterior_vector(&model.config, &branch.classifier, &branch.calibrators, &scores);
    let decisions = decide(model, &posterior, |c| branch.classifier.is_trivial(c))?;
    Ok(Prediction { doc_id: doc.id.clone(), posterior, decisions, route: Route::ZeroShot })
}
