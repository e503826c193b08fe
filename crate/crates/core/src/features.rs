//! Per-language tf-idf weighting with cosine normalization, and tf-idf
//! weighted averaging of word embeddings for the shared zero-shot space.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::LanguageDataset;
use crate::math;
use crate::sparse::SparseVector;
use crate::{Error, Result};

/// Inverse document frequencies fitted on one language's training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightingModel {
    pub language: String,
    pub idf: Vec<f64>,
    pub n_train_docs: usize,
}

impl WeightingModel {
    /// Unit idf over `vocabulary_size` features: plain sublinear tf weighting,
    /// used for languages without training data.
    pub fn uniform(language: impl Into<String>, vocabulary_size: usize) -> Self {
        Self { language: language.into(), idf: vec![1.0; vocabulary_size], n_train_docs: 0 }
    }

    /// All-zero idf: every document maps to the zero vector.
    pub fn annihilating(language: impl Into<String>, vocabulary_size: usize) -> Self {
        Self { language: language.into(), idf: vec![0.0; vocabulary_size], n_train_docs: 0 }
    }
}

/// idf(f) = ln(|Tr| / df(f)); features never seen get idf 0.
pub fn fit_weighting(train: &LanguageDataset) -> Result<WeightingModel> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet(train.language().into()));
    }
    let mut df = vec![0usize; train.vocabulary_size()];
    for doc in train.documents() {
        for (f, count) in doc.vector.iter() {
            if count > 0.0 {
                df[f as usize] += 1;
            }
        }
    }
    let n = train.len() as f64;
    let idf = df
        .into_iter()
        .map(|d| if d == 0 { 0.0 } else { math::log(n / d as f64) })
        .collect();
    Ok(WeightingModel { language: train.language().into(), idf, n_train_docs: train.len() })
}

/// w(f) = ln(1 + #(f,d)) · idf(f), then divided by the Euclidean norm.
///
/// Zero-weight features are dropped; a document whose weights are all zero
/// maps to the empty vector. Features outside the fitted vocabulary weigh 0.
pub fn transform(model: &WeightingModel, raw_counts: &SparseVector) -> Result<SparseVector> {
    let mut entries = Vec::with_capacity(raw_counts.len());
    for (f, count) in raw_counts.iter() {
        if count < 0.0 {
            return Err(Error::NegativeCount(f));
        }
        let idf = model.idf.get(f as usize).copied().unwrap_or(0.0);
        let w = math::log1p(count) * idf;
        if w != 0.0 {
            entries.push((f, w));
        }
    }
    let norm = math::sqrt(entries.iter().map(|(_, w)| w * w).sum());
    if norm == 0.0 {
        return Ok(SparseVector::zeros());
    }
    for e in &mut entries {
        e.1 /= norm;
    }
    SparseVector::new(entries)
}

/// Word vectors for one language, keyed by feature index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: BTreeMap<u32, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        Self { dimension, vectors: BTreeMap::new() }
    }

    /// Adds (or replaces) the vector of `feature`.
    pub fn insert(&mut self, feature: u32, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, found: vector.len() });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("embedding vector"));
        }
        self.vectors.insert(feature, vector);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, feature: u32) -> Option<&[f64]> {
        self.vectors.get(&feature).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &[f64])> {
        self.vectors.iter().map(|(k, v)| (*k, v.as_slice()))
    }
}

/// Σ w(f)·vec(f) / Σ w(f) over the features covered by `table`.
///
/// Returns the zero vector when no feature is covered.
pub fn embed_average(weighted_doc: &SparseVector, table: &EmbeddingTable) -> Vec<f64> {
    let mut acc = vec![0.0; table.dimension()];
    let mut total = 0.0;
    for (f, w) in weighted_doc.iter() {
        if let Some(v) = table.get(f) {
            for (a, x) in acc.iter_mut().zip(v) {
                *a += w * x;
            }
            total += w;
        }
    }
    if total != 0.0 {
        for a in &mut acc {
            *a /= total;
        }
    }
    acc
}
