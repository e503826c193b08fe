use alloc::vec::Vec;

use super::train::posterior_vector;
use super::{Counters, FunnelModel, MetaClassifier, Prediction, Route};
use crate::corpus::{Document, LabelSet};
use crate::features::transform;
use crate::{Error, Result};

impl MetaClassifier {
    /// Raw meta scores for one posterior vector.
    pub fn scores(&self, posterior: &[f64]) -> Result<Vec<f64>> {
        match &self.feature_map {
            Some(map) => Ok(self.classifier.scores(map.map(posterior)?.as_slice())),
            None => {
                if posterior.len() != self.classifier.n_classes() {
                    return Err(Error::DimensionMismatch {
                        expected: self.classifier.n_classes(),
                        found: posterior.len(),
                    });
                }
                Ok(self.classifier.scores(posterior))
            }
        }
    }
}

/// Tier-2 decisions; a class whose tier-1 scorer is a trivial rejector is
/// never decided positive.
pub(super) fn decide(model: &FunnelModel, posterior: &[f64], rejects: impl Fn(usize) -> bool) -> Result<LabelSet> {
    Counters::bump(&model.counters.tier2);
    let scores = model.tier2.scores(posterior)?;
    Ok(scores.iter().enumerate().filter(|&(c, &s)| s >= 0.0 && !rejects(c)).map(|(c, _)| c).collect())
}

/// Classifies `doc` with the tier-1 classifier of `language` and the
/// meta-classifier.
pub fn predict(model: &FunnelModel, language: &str, doc: &Document) -> Result<Prediction> {
    let t1 = model.tier1.get(language).ok_or_else(|| Error::UnknownLanguage(language.into()))?;
    let weighted = transform(&t1.weighting, &doc.vector)?;
    Counters::bump(&model.counters.tier1);
    let scores = t1.classifier.scores(&weighted);
    let posterior = posterior_vector(&model.config, &t1.classifier, &t1.calibrators, &scores);
    let decisions = decide(model, &posterior, |c| t1.classifier.is_trivial(c))?;
    Ok(Prediction { doc_id: doc.id.clone(), posterior, decisions, route: Route::Language(language.into()) })
}

/// [`predict`] over many documents of one language, in input order.
pub fn predict_batch(model: &FunnelModel, language: &str, docs: &[Document]) -> Result<Vec<Prediction>> {
    crate::par::map_indexed(docs.len(), |i| predict(model, language, &docs[i])).into_iter().collect()
}
