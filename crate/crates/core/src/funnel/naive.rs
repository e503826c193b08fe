use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::config::FunnelConfig;
use super::train::{check_corpus, language_seed, prepare_language};
use crate::corpus::{Document, LabelSet, MultilingualCorpus};
use crate::features::{transform, WeightingModel};
use crate::learn::{grid_search_reg, train_multilabel, MultilabelClassifier};
use crate::{par, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveLanguage {
    pub weighting: WeightingModel,
    pub classifier: MultilabelClassifier,
    pub reg_strength: f64,
}

/// Independent monolingual classifiers, one per language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveModel {
    pub class_names: Vec<String>,
    pub languages: BTreeMap<String, NaiveLanguage>,
}

/// Trains every language on its own data only, with a per-language
/// grid-searched regularization strength.
pub fn train_naive(corpus: &MultilingualCorpus, cfg: &FunnelConfig) -> Result<NaiveModel> {
    check_corpus(corpus, cfg)?;
    let n_classes = corpus.n_classes();
    let datasets: Vec<_> = corpus.train().values().collect();
    let trained = par::map_indexed(datasets.len(), |i| {
        let data = prepare_language(datasets[i], cfg.empty_language)?;
        if data.weighted.is_empty() {
            let smallest = cfg.grid.iter().copied().fold(f64::INFINITY, f64::min);
            let classifier = MultilabelClassifier::all_trivial(n_classes);
            return Ok(NaiveLanguage { weighting: data.weighting, classifier, reg_strength: smallest });
        }
        let rows = data.rows();
        let tcfg = cfg.base.with_seed(language_seed(cfg, &data.language, 0x9a1));
        let reg = grid_search_reg(&rows, &data.labels, n_classes, &cfg.grid, cfg.grid_folds, &tcfg)?;
        let classifier = train_multilabel(&rows, &data.labels, n_classes, &tcfg.with_reg_strength(reg))?;
        Ok(NaiveLanguage { weighting: data.weighting.clone(), classifier, reg_strength: reg })
    });
    let languages = corpus
        .train()
        .keys()
        .cloned()
        .zip(trained)
        .map(|(k, m)| m.map(|m| (k, m)))
        .collect::<Result<_>>()?;
    Ok(NaiveModel { class_names: corpus.class_names().to_vec(), languages })
}

pub fn predict_naive(model: &NaiveModel, language: &str, doc: &Document) -> Result<LabelSet> {
    let m = model.languages.get(language).ok_or_else(|| Error::UnknownLanguage(language.into()))?;
    Ok(m.classifier.decide(&transform(&m.weighting, &doc.vector)?))
}
