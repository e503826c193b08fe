//! Seeded generator of multilingual multilabel corpora with a latent-topic
//! structure shared across languages.
//!
//! Every class owns a seed topic over a shared concept inventory. Each
//! language sees a perturbed copy of every topic and maps concepts to its own
//! feature indices through a private permutation, so feature spaces are
//! disjoint while the class signal is transferable. Documents mix the topics
//! of their labels with a Zipfian background whose share grows as
//! `signal_strength` shrinks. Label sets come from a Gaussian chain over the
//! classes: adjacent classes co-occur more often as `label_correlation` grows,
//! while every class keeps its sampled prevalence.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Alignment, Document, LabelSet, LanguageDataset, MultilingualCorpus};
use crate::features::EmbeddingTable;
use crate::math;
use crate::rng::{self, StreamRng};
use crate::sparse::SparseVector;
use crate::{Error, Result};

const LANGUAGE_NAMES: [&str; 11] = ["en", "it", "es", "fr", "de", "sv", "da", "pt", "nl", "fi", "hu"];

/// Language ids used by the generator, in generation order.
pub fn language_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| LANGUAGE_NAMES.get(i).map_or_else(|| format!("l{i:02}"), |s| s.to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_languages: usize,
    pub n_classes: usize,
    pub vocab_per_language: usize,
    pub docs_per_language_train: usize,
    pub docs_per_language_test: usize,
    pub mean_doc_length: usize,
    /// In [0, 1]; correlation of adjacent latent label variables.
    pub label_correlation: f64,
    /// Class prevalences are drawn uniformly from this range.
    pub class_prevalence_range: (f64, f64),
    pub signal_strength: f64,
    pub seed: u64,
    /// Generate translation-aligned documents instead of comparable ones.
    pub parallel: bool,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_languages: 5,
            n_classes: 20,
            vocab_per_language: 1000,
            docs_per_language_train: 200,
            docs_per_language_test: 200,
            mean_doc_length: 60,
            label_correlation: 0.5,
            class_prevalence_range: (0.05, 0.3),
            signal_strength: 0.5,
            seed: 0,
            parallel: false,
        }
    }
}

impl SyntheticConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let counts: [(&'static str, usize); 6] = [
            ("n_languages", self.n_languages),
            ("n_classes", self.n_classes),
            ("vocab_per_language", self.vocab_per_language),
            ("docs_per_language_train", self.docs_per_language_train),
            ("docs_per_language_test", self.docs_per_language_test),
            ("mean_doc_length", self.mean_doc_length),
        ];
        for (field, v) in counts {
            if v == 0 {
                return Err(Error::InvalidConfig { field, reason: "must be >= 1".into() });
            }
        }
        if !(0.0..=1.0).contains(&self.label_correlation) {
            return Err(Error::InvalidConfig {
                field: "label_correlation",
                reason: format!("{} not in [0, 1]", self.label_correlation),
            });
        }
        let (lo, hi) = self.class_prevalence_range;
        if !(lo > 0.0 && hi < 1.0 && lo <= hi) {
            return Err(Error::InvalidConfig {
                field: "class_prevalence_range",
                reason: format!("({lo}, {hi}) must satisfy 0 < lo <= hi < 1"),
            });
        }
        if !(self.signal_strength > 0.0 && self.signal_strength.is_finite()) {
            return Err(Error::InvalidConfig {
                field: "signal_strength",
                reason: format!("{} must be > 0", self.signal_strength),
            });
        }
        Ok(())
    }

    fn topic_size(&self) -> usize {
        (self.vocab_per_language / (2 * self.n_classes)).clamp(8, 50).min(self.vocab_per_language)
    }
}

/// Cumulative sampling table over word indices.
#[derive(Debug, Clone)]
struct Table {
    words: Vec<u32>,
    cumulative: Vec<f64>,
}

impl Table {
    fn new(entries: Vec<(u32, f64)>) -> Self {
        let mut total = 0.0;
        let mut words = Vec::with_capacity(entries.len());
        let mut cumulative = Vec::with_capacity(entries.len());
        for (w, p) in entries {
            total += p;
            words.push(w);
            cumulative.push(total);
        }
        for c in &mut cumulative {
            *c /= total;
        }
        Self { words, cumulative }
    }

    fn pick(&self, u: f64) -> u32 {
        let i = self.cumulative.partition_point(|&c| c <= u).min(self.words.len() - 1);
        self.words[i]
    }
}

/// Sampled topic structure from which corpora and embeddings are drawn.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    cfg: SyntheticConfig,
    languages: Vec<String>,
    prevalences: Vec<f64>,
    thresholds: Vec<f64>,
    /// topic concepts per class
    topics: Vec<Vec<u32>>,
    /// concept → word index, per language
    lexicons: Vec<Vec<u32>>,
    background: Vec<Table>,
    topic_tables: Vec<Vec<Table>>,
}

impl SyntheticWorld {
    pub fn new(cfg: &SyntheticConfig) -> Result<Self> {
        cfg.validate()?;
        let v = cfg.vocab_per_language;
        let languages = language_names(cfg.n_languages);
        let total_train = (cfg.n_languages * cfg.docs_per_language_train) as f64;

        let mut r = rng::stream(cfg.seed, 1);
        let (lo, hi) = cfg.class_prevalence_range;
        let prevalences: Vec<f64> = (0..cfg.n_classes).map(|_| lo + (hi - lo) * rng::uniform(&mut r)).collect();
        for (class, &p) in prevalences.iter().enumerate() {
            if p * total_train < 1.0 {
                return Err(Error::InfeasiblePrevalence { class, expected: p * total_train });
            }
        }
        let thresholds = prevalences.iter().map(|&p| inverse_normal_cdf(1.0 - p)).collect();

        // Zipfian background over concepts in a random rank order.
        let ranks = rng::permutation(v, &mut r);
        let background_concepts: Vec<f64> = (0..v).map(|c| 1.0 / (ranks[c] as f64 + 1.0)).collect();

        let t = cfg.topic_size();
        let mut topics = Vec::with_capacity(cfg.n_classes);
        let mut seed_weights = Vec::with_capacity(cfg.n_classes);
        for _ in 0..cfg.n_classes {
            let perm = rng::permutation(v, &mut r);
            topics.push(perm[..t].iter().map(|&c| c as u32).collect::<Vec<u32>>());
            seed_weights.push((0..t).map(|_| math::exp(0.5 * rng::normal(&mut r))).collect::<Vec<f64>>());
        }

        let mut lexicons = Vec::with_capacity(cfg.n_languages);
        let mut background = Vec::with_capacity(cfg.n_languages);
        let mut topic_tables = Vec::with_capacity(cfg.n_languages);
        for lang in &languages {
            let mut lr = rng::stream(cfg.seed, 2 ^ rng::tag_of(lang));
            let lexicon: Vec<u32> = rng::permutation(v, &mut lr).into_iter().map(|w| w as u32).collect();
            background.push(Table::new(
                (0..v).map(|c| (lexicon[c], background_concepts[c])).collect(),
            ));
            let tables = topics
                .iter()
                .zip(&seed_weights)
                .map(|(concepts, weights)| {
                    let entries = concepts
                        .iter()
                        .zip(weights)
                        .map(|(&c, &w)| (lexicon[c as usize], w * math::exp(0.5 * rng::normal(&mut lr))))
                        .collect();
                    Table::new(entries)
                })
                .collect();
            lexicons.push(lexicon);
            topic_tables.push(tables);
        }

        Ok(Self { cfg: cfg.clone(), languages, prevalences, thresholds, topics, lexicons, background, topic_tables })
    }

    pub fn config(&self) -> &SyntheticConfig {
        &self.cfg
    }

    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    /// Class prevalences the label sampler targets.
    pub fn prevalences(&self) -> &[f64] {
        &self.prevalences
    }

    fn sample_labels(&self, r: &mut StreamRng) -> LabelSet {
        let rho = self.cfg.label_correlation;
        let keep = math::sqrt(1.0 - rho * rho);
        let mut z = 0.0;
        let mut members = Vec::new();
        for (c, &th) in self.thresholds.iter().enumerate() {
            let e = rng::normal(r);
            z = if c == 0 { e } else { rho * z + keep * e };
            if z > th {
                members.push(c);
            }
        }
        LabelSet::new(members)
    }

    fn plan_tokens(&self, labels: &LabelSet, r: &mut StreamRng) -> Vec<(Option<usize>, f64)> {
        let mean = self.cfg.mean_doc_length as f64;
        let len = (mean * (0.5 + rng::uniform(r))).max(1.0) as usize;
        let m = labels.len() as f64;
        let s = self.cfg.signal_strength;
        let p_topic = m * s / (m * s + 1.0);
        (0..len)
            .map(|_| {
                let topical = rng::uniform(r) < p_topic;
                let source = if topical { Some(labels.as_slice()[r.random_range(0..labels.len())]) } else { None };
                (source, rng::uniform(r))
            })
            .collect()
    }

    fn realize(&self, lang: usize, plan: &[(Option<usize>, f64)]) -> SparseVector {
        let entries = plan
            .iter()
            .map(|&(source, u)| {
                let w = match source {
                    Some(c) => self.topic_tables[lang][c].pick(u),
                    None => self.background[lang].pick(u),
                };
                (w, 1.0)
            })
            .collect();
        SparseVector::from_unsorted(entries).expect("token counts are finite")
    }

    /// Draws the corpus described by the configuration.
    pub fn corpus(&self) -> Result<MultilingualCorpus> {
        let cfg = &self.cfg;
        let nl = cfg.n_languages;
        let ntr = cfg.docs_per_language_train;
        let nte = cfg.docs_per_language_test;
        let mut r = rng::stream(cfg.seed, 3);

        // Label sets first, so every class can be guaranteed a training positive.
        let groups_train = if cfg.parallel { 1 } else { nl };
        let mut train_labels: Vec<Vec<LabelSet>> =
            (0..groups_train).map(|_| (0..ntr).map(|_| self.sample_labels(&mut r)).collect()).collect();
        let test_labels: Vec<Vec<LabelSet>> =
            (0..groups_train).map(|_| (0..nte).map(|_| self.sample_labels(&mut r)).collect()).collect();
        for c in 0..cfg.n_classes {
            if !train_labels.iter().flatten().any(|l| l.contains(c)) {
                let g = c % groups_train;
                let d = c % ntr;
                let mut members = train_labels[g][d].as_slice().to_vec();
                members.push(c);
                train_labels[g][d] = LabelSet::new(members);
            }
        }

        let mut train = BTreeMap::new();
        let mut test = BTreeMap::new();
        let mut alignment = Alignment::new();
        let mut docs_train: Vec<Vec<Document>> = vec![Vec::with_capacity(ntr); nl];
        let mut docs_test: Vec<Vec<Document>> = vec![Vec::with_capacity(nte); nl];

        if cfg.parallel {
            for (split, labels, docs, tag) in
                [("tr", &train_labels[0], &mut docs_train, "g"), ("te", &test_labels[0], &mut docs_test, "t")]
            {
                for (i, l) in labels.iter().enumerate() {
                    let plan = self.plan_tokens(l, &mut r);
                    let group = alignment.entry(format!("{tag}{i:05}")).or_default();
                    for (li, lang) in self.languages.iter().enumerate() {
                        let id = format!("{lang}-{split}-{i:05}");
                        group.insert(lang.clone(), id.clone());
                        docs[li].push(Document::new(id, self.realize(li, &plan), l.clone()));
                    }
                }
            }
        } else {
            for (li, lang) in self.languages.iter().enumerate() {
                for (split, labels, docs) in
                    [("tr", &train_labels[li], &mut docs_train), ("te", &test_labels[li], &mut docs_test)]
                {
                    for (i, l) in labels.iter().enumerate() {
                        let plan = self.plan_tokens(l, &mut r);
                        docs[li].push(Document::new(format!("{lang}-{split}-{i:05}"), self.realize(li, &plan), l.clone()));
                    }
                }
            }
        }

        for (li, lang) in self.languages.iter().enumerate() {
            let v = cfg.vocab_per_language;
            train.insert(lang.clone(), LanguageDataset::new(lang.clone(), core::mem::take(&mut docs_train[li]), v)?);
            test.insert(lang.clone(), LanguageDataset::new(lang.clone(), core::mem::take(&mut docs_test[li]), v)?);
        }
        let class_names = (0..cfg.n_classes).map(|c| format!("C{c:02}")).collect();
        MultilingualCorpus::new(class_names, train, test, cfg.parallel, cfg.parallel.then_some(alignment))
    }

    /// Cross-lingually aligned word embeddings for every generated language.
    ///
    /// A concept's vector is a random vector plus the directions of the
    /// classes whose topics contain it; each language's word vector is its
    /// concept's vector plus `noise`-scaled language-specific jitter.
    pub fn embeddings(&self, dimension: usize, noise: f64) -> Result<BTreeMap<String, EmbeddingTable>> {
        if dimension == 0 {
            return Err(Error::InvalidConfig { field: "dimension", reason: "must be >= 1".into() });
        }
        let v = self.cfg.vocab_per_language;
        let scale = 1.0 / math::sqrt(dimension as f64);
        let mut r = rng::stream(self.cfg.seed, 4);
        let mut concepts: Vec<Vec<f64>> =
            (0..v).map(|_| (0..dimension).map(|_| scale * rng::normal(&mut r)).collect()).collect();
        for topic in &self.topics {
            let direction: Vec<f64> = (0..dimension).map(|_| scale * rng::normal(&mut r)).collect();
            for &c in topic {
                for (x, d) in concepts[c as usize].iter_mut().zip(&direction) {
                    *x += d;
                }
            }
        }
        let mut out = BTreeMap::new();
        for (li, lang) in self.languages.iter().enumerate() {
            let mut lr = rng::stream(self.cfg.seed, 5 ^ rng::tag_of(lang));
            let mut table = EmbeddingTable::new(dimension);
            for (c, vector) in concepts.iter().enumerate() {
                let word = self.lexicons[li][c];
                let jittered = vector.iter().map(|x| x + noise * scale * rng::normal(&mut lr)).collect();
                table.insert(word, jittered)?;
            }
            out.insert(lang.clone(), table);
        }
        Ok(out)
    }
}

/// Generates a corpus from `cfg`; a pure function of the configuration.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<MultilingualCorpus> {
    SyntheticWorld::new(cfg)?.corpus()
}

/// Inverse of the standard normal CDF (Acklam's rational approximation with
/// one Halley refinement step).
pub fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383_577_518_672_69e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] =
        [-5.447609879822406e1, 1.615858368580409e2, -1.556989798598866e2, 6.680131188771972e1, -1.328068155288572e1];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let lower = 0.02425;
    let x = if p < lower {
        let q = math::sqrt(-2.0 * math::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - lower {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = math::sqrt(-2.0 * math::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = 0.5 * libm::erfc(-x / core::f64::consts::SQRT_2) - p;
    let u = e * math::sqrt(math::TAU) * math::exp(x * x / 2.0);
    x - u / (1.0 + x * u / 2.0)
}
