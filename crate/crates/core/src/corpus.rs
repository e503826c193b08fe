//! Multilingual multilabel corpora and the sampling views used by the
//! experiment protocols.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::rng;
use crate::sparse::SparseVector;
use crate::{Error, Result};

/// Sorted, duplicate-free set of class indices.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<usize>", into = "Vec<usize>")]
pub struct LabelSet(Vec<usize>);

impl From<Vec<usize>> for LabelSet {
    fn from(members: Vec<usize>) -> Self {
        Self::new(members)
    }
}

impl From<LabelSet> for Vec<usize> {
    fn from(labels: LabelSet) -> Self {
        labels.0
    }
}

impl LabelSet {
    /// Builds a label set, sorting and deduplicating `members`.
    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        Self(members)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn contains(&self, class: usize) -> bool {
        self.0.binary_search(&class).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Fails if any member is outside `[0, n_classes)`.
    pub fn check(&self, n_classes: usize) -> Result<()> {
        match self.0.last() {
            Some(&index) if index >= n_classes => Err(Error::UnknownClass { index, n_classes }),
            _ => Ok(()),
        }
    }
}

impl FromIterator<usize> for LabelSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub vector: SparseVector,
    pub labels: LabelSet,
}

impl Document {
    pub fn new(id: impl Into<String>, vector: SparseVector, labels: LabelSet) -> Self {
        Self { id: id.into(), vector, labels }
    }
}

/// The training or test documents of one language.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageDataset {
    language: String,
    documents: Vec<Document>,
    vocabulary_size: usize,
}

impl LanguageDataset {
    /// Validates feature ranges and doc-id uniqueness.
    pub fn new(language: impl Into<String>, documents: Vec<Document>, vocabulary_size: usize) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for doc in &documents {
            if let Some(index) = doc.vector.max_index() {
                if index as usize >= vocabulary_size {
                    return Err(Error::FeatureOutOfRange { index, vocabulary_size });
                }
            }
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateDocId(doc.id.clone()));
            }
        }
        Ok(Self { language: language.into(), documents, vocabulary_size })
    }

    pub fn empty(language: impl Into<String>, vocabulary_size: usize) -> Self {
        Self { language: language.into(), documents: Vec::new(), vocabulary_size }
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn vocabulary_size(&self) -> usize {
        self.vocabulary_size
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn vectors(&self) -> Vec<&SparseVector> {
        self.documents.iter().map(|d| &d.vector).collect()
    }

    pub fn labels(&self) -> Vec<LabelSet> {
        self.documents.iter().map(|d| d.labels.clone()).collect()
    }

    pub fn find(&self, doc_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == doc_id)
    }

    /// Keeps the documents at `positions`, in that order.
    fn select(&self, positions: &[usize]) -> Self {
        Self {
            language: self.language.clone(),
            documents: positions.iter().map(|&p| self.documents[p].clone()).collect(),
            vocabulary_size: self.vocabulary_size,
        }
    }
}

/// Alignment groups: group id → (language id → doc id).
pub type Alignment = BTreeMap<String, BTreeMap<String, String>>;

/// Per-language train/test datasets over one shared class inventory.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilingualCorpus {
    class_names: Vec<String>,
    train: BTreeMap<String, LanguageDataset>,
    test: BTreeMap<String, LanguageDataset>,
    parallel: bool,
    alignment: Option<Alignment>,
}

impl MultilingualCorpus {
    pub fn new(
        class_names: Vec<String>,
        train: BTreeMap<String, LanguageDataset>,
        test: BTreeMap<String, LanguageDataset>,
        parallel: bool,
        alignment: Option<Alignment>,
    ) -> Result<Self> {
        let mut names = BTreeSet::new();
        for name in &class_names {
            if !names.insert(name.as_str()) {
                return Err(Error::InvalidConfig { field: "class_names", reason: format!("duplicate class `{name}`") });
            }
        }
        let n = class_names.len();
        for (key, ds) in train.iter().chain(test.iter()) {
            if key != ds.language() {
                return Err(Error::InvalidConfig {
                    field: "language",
                    reason: format!("dataset keyed `{key}` declares language `{}`", ds.language()),
                });
            }
            for doc in ds.documents() {
                doc.labels.check(n)?;
            }
        }
        if parallel {
            let groups = alignment.as_ref().ok_or(Error::NotParallel)?;
            for members in groups.values() {
                for (lang, doc_id) in members {
                    let found = train.get(lang).and_then(|d| d.find(doc_id)).is_some()
                        || test.get(lang).and_then(|d| d.find(doc_id)).is_some();
                    if !found {
                        return Err(Error::Unaligned(doc_id.clone()));
                    }
                }
            }
        }
        Ok(Self { class_names, train, test, parallel, alignment })
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn train(&self) -> &BTreeMap<String, LanguageDataset> {
        &self.train
    }

    pub fn test(&self) -> &BTreeMap<String, LanguageDataset> {
        &self.test
    }

    pub fn is_parallel(&self) -> bool {
        self.parallel
    }

    pub fn alignment(&self) -> Option<&Alignment> {
        self.alignment.as_ref()
    }

    /// All languages appearing in either split, sorted.
    pub fn languages(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.train.keys().chain(self.test.keys()).collect();
        set.into_iter().cloned().collect()
    }

    pub fn train_set(&self, language: &str) -> Result<&LanguageDataset> {
        self.train.get(language).ok_or_else(|| Error::UnknownLanguage(language.to_string()))
    }

    pub fn test_set(&self, language: &str) -> Result<&LanguageDataset> {
        self.test.get(language).ok_or_else(|| Error::UnknownLanguage(language.to_string()))
    }

    /// Total number of training documents across languages.
    pub fn n_train_docs(&self) -> usize {
        self.train.values().map(LanguageDataset::len).sum()
    }

    /// Copy whose training split only contains `keep`; the test split is untouched.
    pub fn with_train_languages(&self, keep: &[String]) -> Self {
        let mut out = self.clone();
        out.train.retain(|k, _| keep.contains(k));
        out.drop_alignment();
        out
    }

    /// Copy with every split restricted to `language`.
    pub fn only_language(&self, language: &str) -> Result<Self> {
        let mut out = self.clone();
        if !self.train.contains_key(language) && !self.test.contains_key(language) {
            return Err(Error::UnknownLanguage(language.to_string()));
        }
        out.train.retain(|k, _| k == language);
        out.test.retain(|k, _| k == language);
        out.drop_alignment();
        Ok(out)
    }

    /// Single-class copy: class `class` becomes class 0 of a one-class inventory.
    pub fn only_class(&self, class: usize) -> Result<Self> {
        if class >= self.n_classes() {
            return Err(Error::UnknownClass { index: class, n_classes: self.n_classes() });
        }
        let remap = |ds: &LanguageDataset| {
            let documents = ds
                .documents
                .iter()
                .map(|d| {
                    let labels = if d.labels.contains(class) { LabelSet::new(alloc::vec![0]) } else { LabelSet::empty() };
                    Document::new(d.id.clone(), d.vector.clone(), labels)
                })
                .collect();
            LanguageDataset { language: ds.language.clone(), documents, vocabulary_size: ds.vocabulary_size }
        };
        Ok(Self {
            class_names: alloc::vec![self.class_names[class].clone()],
            train: self.train.iter().map(|(k, v)| (k.clone(), remap(v))).collect(),
            test: self.test.iter().map(|(k, v)| (k.clone(), remap(v))).collect(),
            parallel: self.parallel,
            alignment: self.alignment.clone(),
        })
    }

    fn drop_alignment(&mut self) {
        self.parallel = false;
        self.alignment = None;
    }
}

/// Keeps ⌈fraction·|Tr|⌉ training documents of `language`.
///
/// Documents are ranked by a seeded permutation of their sorted ids and a
/// prefix is kept, so for a fixed seed the retained set at a smaller fraction
/// is always a subset of the retained set at a larger one. Retained documents
/// keep their original relative order.
pub fn subsample_training(
    corpus: &MultilingualCorpus,
    language: &str,
    fraction: f64,
    seed: u64,
) -> Result<MultilingualCorpus> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidConfig { field: "fraction", reason: format!("{fraction} not in [0, 1]") });
    }
    let ds = corpus.train_set(language)?;
    let n = ds.len();
    let keep = libm::ceil(fraction * n as f64 - 1e-9).max(0.0) as usize;
    let keep = keep.min(n);

    let mut by_id: Vec<usize> = (0..n).collect();
    by_id.sort_by(|&a, &b| ds.documents[a].id.cmp(&ds.documents[b].id));
    let mut r = rng::stream(seed, rng::tag_of(language) ^ 0x5u64);
    let perm = rng::permutation(n, &mut r);
    let mut retained: Vec<usize> = perm[..keep].iter().map(|&p| by_id[p]).collect();
    retained.sort_unstable();

    let mut out = corpus.clone();
    out.train.insert(language.to_string(), ds.select(&retained));
    Ok(out)
}

/// Monolingual view in which every training document is replaced by its
/// aligned `pivot`-language version; the test split is the pivot's.
pub fn make_upperbound_view(corpus: &MultilingualCorpus, pivot: &str) -> Result<MultilingualCorpus> {
    if !corpus.parallel {
        return Err(Error::NotParallel);
    }
    let groups = corpus.alignment.as_ref().ok_or(Error::NotParallel)?;
    let pivot_train = corpus.train_set(pivot)?;
    let pivot_test = corpus.test_set(pivot)?;

    let mut group_of: BTreeMap<(&str, &str), &str> = BTreeMap::new();
    for (group, members) in groups {
        for (lang, doc) in members {
            group_of.insert((lang.as_str(), doc.as_str()), group.as_str());
        }
    }

    let mut documents = Vec::new();
    for (lang, ds) in &corpus.train {
        for doc in ds.documents() {
            let group = group_of
                .get(&(lang.as_str(), doc.id.as_str()))
                .ok_or_else(|| Error::Unaligned(doc.id.clone()))?;
            let pivot_id = groups[*group].get(pivot).ok_or_else(|| Error::MissingPivot {
                group: group.to_string(),
                language: pivot.to_string(),
            })?;
            let pivot_doc = pivot_train
                .find(pivot_id)
                .ok_or_else(|| Error::MissingPivot { group: group.to_string(), language: pivot.to_string() })?;
            let id = if lang == pivot { pivot_doc.id.clone() } else { format!("{}@{}", doc.id, pivot) };
            documents.push(Document::new(id, pivot_doc.vector.clone(), pivot_doc.labels.clone()));
        }
    }

    let mut train = BTreeMap::new();
    train.insert(pivot.to_string(), LanguageDataset::new(pivot, documents, pivot_train.vocabulary_size())?);
    let mut test = BTreeMap::new();
    test.insert(pivot.to_string(), pivot_test.clone());
    MultilingualCorpus::new(corpus.class_names.clone(), train, test, false, None)
}
