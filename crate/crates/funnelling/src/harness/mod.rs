//! Experiment protocols: each mode trains and evaluates a set of methods over
//! several trials and writes per-trial and summary reports.
//!
//! Trial `t` uses seed `base + t` for everything it samples, so the runs of
//! different methods within a trial are paired. Reports depend only on the
//! corpus, the experiment spec and the base seed; wall-clock columns (`train_seconds`,
//! `test_seconds`) are the only exception.

mod bench;
mod modes;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use funnel_core::corpus::{Document, LabelSet, MultilingualCorpus};
use funnel_core::features::EmbeddingTable;
use funnel_core::funnel::{
    predict, predict_naive, predict_zeroshot, train_funnel, train_naive, train_zeroshot, FunnelConfig, Variant,
};
use funnel_core::metrics::{confusion, ConfusionCounts, EvalReport, RunMeta};
use funnel_core::synthetic::{SyntheticConfig, SyntheticWorld};
use serde::{Deserialize, Serialize};

use crate::corpus_io::load_corpus;
use crate::{Error, Result};

pub use bench::{run_bench, BenchRow, HardwareInfo};
pub use modes::{AblationReport, CurveRow, CurveSummary, ZeroShotRow};

/// Dimension and jitter of the embeddings generated alongside synthetic corpora.
pub const SYNTHETIC_EMBEDDING_DIM: usize = 32;
pub const SYNTHETIC_EMBEDDING_NOISE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Mode {
    Mlclc,
    MonoBinary,
    Curves,
    Ablation,
    Calibration,
    Zeroshot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Method {
    Naive,
    FunTat,
    FunKfcv,
    Upperbound,
    Zeroshot,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::FunTat => "fun_tat",
            Method::FunKfcv => "fun_kfcv",
            Method::Upperbound => "upperbound",
            Method::Zeroshot => "zeroshot",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusSource {
    /// A corpus on disk, shared by all trials; embeddings from the manifest
    /// or from `<dir>/<language>.vec`.
    Manifest { path: PathBuf, embeddings: Option<PathBuf> },
    /// A synthetic corpus regenerated for every trial with the trial seed.
    Synthetic(SyntheticConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub source: CorpusSource,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub fractions: Vec<f64>,
    pub seed: u64,
    /// Template for every funnelling model; the seed is set per trial.
    pub funnel: FunnelConfig,
    /// Share of target-language training data kept in ablation runs.
    pub ablation_fraction: f64,
}

impl ExperimentSpec {
    pub fn new(mode: Mode, source: CorpusSource) -> Self {
        Self {
            mode,
            source,
            methods: vec![Method::Naive, Method::FunTat],
            trials: 10,
            fractions: vec![0.0, 0.1, 0.2, 0.5, 1.0],
            seed: 0,
            funnel: FunnelConfig::default(),
            ablation_fraction: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Usage("trials must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Usage("no methods given".into()));
        }
        if let Some(f) = self.fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(Error::Usage(format!("fraction {f} not in [0, 1]")));
        }
        if !(0.0..=1.0).contains(&self.ablation_fraction) {
            return Err(Error::Usage(format!("ablation fraction {} not in [0, 1]", self.ablation_fraction)));
        }
        self.funnel.validate()?;
        Ok(())
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed.wrapping_add(trial as u64)
    }

    fn funnel_config(&self, trial: usize) -> FunnelConfig {
        self.funnel.clone().with_seed(self.trial_seed(trial))
    }
}

/// Corpus and embeddings used by one trial.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub dataset: String,
    pub corpus: MultilingualCorpus,
    pub embeddings: BTreeMap<String, EmbeddingTable>,
}

/// Produces trial corpora; manifests are read once.
pub struct CorpusProvider {
    source: CorpusSource,
    loaded: Option<TrialData>,
}

impl CorpusProvider {
    pub fn new(source: &CorpusSource) -> Result<Self> {
        let loaded = match source {
            CorpusSource::Manifest { path, embeddings } => {
                let l = load_corpus(path)?;
                let dataset = path
                    .parent()
                    .and_then(Path::file_name)
                    .map_or_else(|| "corpus".to_string(), |s| s.to_string_lossy().into_owned());
                Some(TrialData { dataset, embeddings: l.embeddings(embeddings.as_deref())?, corpus: l.corpus })
            }
            CorpusSource::Synthetic(_) => None,
        };
        Ok(Self { source: source.clone(), loaded })
    }

    pub fn trial(&self, seed: u64) -> Result<TrialData> {
        match (&self.source, &self.loaded) {
            (_, Some(d)) => Ok(d.clone()),
            (CorpusSource::Synthetic(cfg), None) => {
                let world = SyntheticWorld::new(&cfg.clone().with_seed(seed))?;
                Ok(TrialData {
                    dataset: "synthetic".into(),
                    corpus: world.corpus()?,
                    embeddings: world.embeddings(SYNTHETIC_EMBEDDING_DIM, SYNTHETIC_EMBEDDING_NOISE)?,
                })
            }
            (CorpusSource::Manifest { .. }, None) => unreachable!("manifests are loaded eagerly"),
        }
    }
}

/// Per-language confusion counts of `decide` over the test split of `languages`.
pub(crate) fn evaluate_languages<F>(
    corpus: &MultilingualCorpus,
    languages: &[String],
    decide: F,
) -> Result<BTreeMap<String, Vec<ConfusionCounts>>>
where
    F: Fn(&str, &Document) -> Result<LabelSet>,
{
    let n = corpus.n_classes();
    let mut out = BTreeMap::new();
    for lang in languages {
        let test = corpus.test_set(lang)?;
        let pred = test.documents().iter().map(|d| decide(lang, d)).collect::<Result<Vec<_>>>()?;
        out.insert(lang.clone(), confusion(&test.labels(), &pred, n)?);
    }
    Ok(out)
}

pub(crate) fn pooled(counts: &BTreeMap<String, Vec<ConfusionCounts>>, n_classes: usize) -> Vec<ConfusionCounts> {
    let mut total = vec![ConfusionCounts::default(); n_classes];
    for per_class in counts.values() {
        for (t, c) in total.iter_mut().zip(per_class) {
            *t = *t + *c;
        }
    }
    total
}

/// Reports per language plus one pooled over languages (`all`).
pub(crate) fn reports(
    template: &RunMeta,
    counts: &BTreeMap<String, Vec<ConfusionCounts>>,
    n_classes: usize,
) -> Result<Vec<EvalReport>> {
    let mut out = Vec::with_capacity(counts.len() + 1);
    for (lang, c) in counts {
        let meta = RunMeta { language: lang.clone(), ..template.clone() };
        out.push(EvalReport::from_counts(meta, c.clone())?);
    }
    let meta = RunMeta { language: "all".into(), ..template.clone() };
    out.push(EvalReport::from_counts(meta, pooled(counts, n_classes))?);
    Ok(out)
}

pub(crate) fn meta(method: &str, cfg: &FunnelConfig, dataset: &str, trial: usize) -> RunMeta {
    RunMeta {
        method: method.into(),
        variant: cfg.variant.name().into(),
        mode: cfg.mode.name().into(),
        dataset: dataset.into(),
        trial: trial as u64,
        language: String::new(),
        train_seconds: 0.0,
        test_seconds: 0.0,
    }
}

fn seconds(since: Instant) -> f64 {
    since.elapsed().as_secs_f64().max(1e-9)
}

/// Trains and evaluates `method` on every test language of `data`.
pub fn run_method(method: Method, data: &TrialData, cfg: &FunnelConfig, trial: usize) -> Result<Vec<EvalReport>> {
    let corpus = &data.corpus;
    let n = corpus.n_classes();
    let languages: Vec<String> = corpus.test().keys().cloned().collect();
    let mut template = meta(method.name(), cfg, &data.dataset, trial);
    let start = Instant::now();
    let counts = match method {
        Method::Naive => {
            let model = train_naive(corpus, cfg)?;
            template.train_seconds = seconds(start);
            let t = Instant::now();
            let c = evaluate_languages(corpus, &languages, |l, d| Ok(predict_naive(&model, l, d)?))?;
            template.test_seconds = seconds(t);
            c
        }
        Method::FunTat | Method::FunKfcv => {
            let variant = if method == Method::FunTat { Variant::Tat } else { Variant::Kfcv };
            let cfg = FunnelConfig { variant, ..cfg.clone() };
            template.variant = variant.name().into();
            let model = train_funnel(corpus, &cfg)?;
            template.train_seconds = seconds(start);
            let t = Instant::now();
            let c = evaluate_languages(corpus, &languages, |l, d| Ok(predict(&model, l, d)?.decisions))?;
            template.test_seconds = seconds(t);
            c
        }
        Method::Zeroshot => {
            let model = train_zeroshot(corpus, &data.embeddings, cfg)?;
            template.train_seconds = seconds(start);
            let t = Instant::now();
            let c = evaluate_languages(corpus, &languages, |l, d| {
                Ok(predict_zeroshot(&model, l, d, data.embeddings.get(l))?.decisions)
            })?;
            template.test_seconds = seconds(t);
            c
        }
        Method::Upperbound => {
            let mut all = BTreeMap::new();
            let (mut train_s, mut test_s) = (0.0, 0.0);
            for lang in &languages {
                let t = Instant::now();
                let view = funnel_core::corpus::make_upperbound_view(corpus, lang)?;
                let model = train_naive(&view, cfg)?;
                train_s += seconds(t);
                let t = Instant::now();
                let c = evaluate_languages(&view, std::slice::from_ref(lang), |l, d| Ok(predict_naive(&model, l, d)?))?;
                test_s += seconds(t);
                all.extend(c);
            }
            template.train_seconds = train_s;
            template.test_seconds = test_s;
            all
        }
    };
    reports(&template, &counts, n)
}

/// Runs `spec`, writing reports into `out`.
pub fn run_experiment(spec: &ExperimentSpec, out: &Path, log: &mut dyn FnMut(&str)) -> Result<()> {
    spec.validate()?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    crate::corpus_io::write_json(&out.join("spec.json"), spec)?;
    let provider = CorpusProvider::new(&spec.source)?;
    match spec.mode {
        Mode::Mlclc => modes::mlclc(spec, &provider, out, log),
        Mode::MonoBinary => modes::mono_binary(spec, &provider, out, log),
        Mode::Curves => modes::curves(spec, &provider, out, log),
        Mode::Ablation => modes::ablation(spec, &provider, out, log),
        Mode::Calibration => modes::calibration(spec, &provider, out, log),
        Mode::Zeroshot => modes::zeroshot(spec, &provider, out, log),
    }
}
