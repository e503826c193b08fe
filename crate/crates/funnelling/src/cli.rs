//! Command-line interface.

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use funnel_core::calibrate::CalibrationMode;
use funnel_core::corpus::{LanguageDataset, MultilingualCorpus};
use funnel_core::funnel::{
    predict, predict_naive, predict_zeroshot, train_funnel, train_naive, train_zeroshot, FunnelConfig, Variant,
};
use funnel_core::metrics::{confusion, EvalReport};
use funnel_core::synthetic::SyntheticConfig;
use funnel_core::synthetic::SyntheticWorld;

use crate::corpus_io::{load_corpus, read_json, write_corpus, write_json};
use crate::harness::{
    meta, reports, run_bench, run_experiment, CorpusSource, ExperimentSpec, Method, Mode, SYNTHETIC_EMBEDDING_DIM,
    SYNTHETIC_EMBEDDING_NOISE,
};
use crate::model_io::{ModelBody, ModelFile};
use crate::predictions::{read_predictions, write_predictions, PredictionRecord};
use crate::report::{write_csv, write_eval_csv};
use crate::{Error, Result};

/// Environment variable read when `--threads` is absent.
pub const THREADS_ENV: &str = "FUNNELLING_THREADS";

#[derive(Debug, Parser)]
#[command(name = "funnelling", version, about = "Funnelling classifiers for multilingual multilabel text")]
pub struct Cli {
    /// Worker threads (default: $FUNNELLING_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic corpus with aligned embeddings.
    Generate(GenerateArgs),
    /// Train a model on the training split of a corpus.
    Train(TrainArgs),
    /// Classify the documents of one split.
    Predict(PredictArgs),
    /// Score a predictions file against the gold labels.
    Evaluate(EvaluateArgs),
    /// Run an experiment protocol over several trials.
    Experiment(ExperimentArgs),
    /// Time training and testing of several methods.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// JSON synthetic-corpus configuration; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub languages: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub parallel: bool,
}

/// Funnelling options shared by training, experiments and benchmarks.
#[derive(Debug, Args, Clone)]
pub struct FunnelArgs {
    /// JSON funnelling configuration; flags below override it.
    #[arg(long = "funnel-config")]
    pub funnel_config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    #[arg(long, value_enum)]
    pub calibration: Option<CalibrationArg>,
    /// Folds of the KFCV variant.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Tat,
    Kfcv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CalibrationArg {
    Calib,
    Nocalib,
    Noprob,
}

impl FunnelArgs {
    fn config(&self) -> Result<FunnelConfig> {
        let mut cfg: FunnelConfig = match &self.funnel_config {
            Some(p) => read_json(p)?,
            None => FunnelConfig::default(),
        };
        if let Some(v) = self.variant {
            cfg.variant = match v {
                VariantArg::Tat => Variant::Tat,
                VariantArg::Kfcv => Variant::Kfcv,
            };
        }
        if let Some(c) = self.calibration {
            cfg.mode = match c {
                CalibrationArg::Calib => CalibrationMode::Calib,
                CalibrationArg::Nocalib => CalibrationMode::NoCalib,
                CalibrationArg::Noprob => CalibrationMode::NoProb,
            };
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        cfg.validate().map_err(|e| Error::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "fun_tat")]
    pub method: Method,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory of `<language>.vec` embedding files (zero-shot only).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[command(flatten)]
    pub funnel: FunnelArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: Split,
    /// Predictions file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: Split,
    /// Directory receiving `evaluation.csv` and `evaluation.json`.
    #[arg(long)]
    pub out: PathBuf,
}

/// Corpus used by experiments and benchmarks: a manifest, or a synthetic
/// corpus regenerated per trial.
#[derive(Debug, Args, Clone)]
pub struct SourceArgs {
    #[arg(long, conflicts_with = "synthetic")]
    pub manifest: Option<PathBuf>,
    /// Use a synthetic corpus, optionally configured by a JSON file.
    #[arg(long, value_name = "CONFIG", num_args = 0..=1, default_missing_value = "")]
    pub synthetic: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

impl SourceArgs {
    fn source(&self) -> Result<CorpusSource> {
        match (&self.manifest, &self.synthetic) {
            (Some(path), None) => Ok(CorpusSource::Manifest { path: path.clone(), embeddings: self.embeddings.clone() }),
            (None, Some(p)) if p.as_os_str().is_empty() => Ok(CorpusSource::Synthetic(SyntheticConfig::default())),
            (None, Some(p)) => Ok(CorpusSource::Synthetic(read_json(p)?)),
            _ => Err(Error::Usage("give either --manifest or --synthetic".into())),
        }
    }
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub mode: Mode,
    #[command(flatten)]
    pub source: SourceArgs,
    /// Report directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Complete experiment spec as JSON; other flags are ignored except `--out`.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long = "method", value_enum, value_delimiter = ',')]
    pub methods: Vec<Method>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub funnel: FunnelArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// CSV file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long = "method", value_enum, value_delimiter = ',', default_values_t = [Method::Naive, Method::FunTat])]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 3)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub funnel: FunnelArgs,
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut (dyn Write + Send), stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn threads(flag: Option<usize>) -> Result<Option<usize>> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Usage(format!("{THREADS_ENV}={v} is not a thread count"))),
        _ => Ok(None),
    }
}

/// Runs an already parsed command inside a pool of the requested size.
pub fn execute(cli: Cli, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads(cli.threads)? {
        if n == 0 {
            return Err(Error::Usage("--threads must be >= 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Usage(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli.command, stdout))
}

fn dispatch(command: Command, stdout: &mut (dyn Write + Send)) -> Result<()> {
    match command {
        Command::Generate(a) => generate(a, stdout),
        Command::Train(a) => train(a, stdout),
        Command::Predict(a) => predict_cmd(a, stdout),
        Command::Evaluate(a) => evaluate(a, stdout),
        Command::Experiment(a) => experiment(a, stdout),
        Command::Bench(a) => bench(a, stdout),
    }
}

fn say(stdout: &mut (dyn Write + Send), line: &str) {
    let _ = writeln!(stdout, "{line}");
}

fn generate(a: GenerateArgs, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let mut cfg: SyntheticConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => SyntheticConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(n) = a.languages {
        cfg.n_languages = n;
    }
    if let Some(n) = a.classes {
        cfg.n_classes = n;
    }
    cfg.parallel |= a.parallel;
    cfg.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let world = SyntheticWorld::new(&cfg)?;
    let corpus = world.corpus()?;
    let embeddings = world.embeddings(SYNTHETIC_EMBEDDING_DIM, SYNTHETIC_EMBEDDING_NOISE)?;
    let manifest = write_corpus(&a.out, &corpus, Some(&embeddings))?;
    say(stdout, &format!("wrote {}", manifest.display()));
    Ok(())
}

fn train(a: TrainArgs, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let mut cfg = a.funnel.config()?.with_seed(a.seed);
    let loaded = load_corpus(&a.manifest)?;
    let corpus = &loaded.corpus;
    let body = match a.method {
        Method::Naive => ModelBody::Naive(train_naive(corpus, &cfg)?),
        Method::FunTat | Method::FunKfcv => {
            if a.funnel.variant.is_none() {
                cfg.variant = if a.method == Method::FunTat { Variant::Tat } else { Variant::Kfcv };
            }
            cfg.validate().map_err(|e| Error::Usage(e.to_string()))?;
            ModelBody::Funnel(train_funnel(corpus, &cfg)?)
        }
        Method::Zeroshot => {
            let embeddings = loaded.embeddings(a.embeddings.as_deref())?;
            ModelBody::Funnel(train_zeroshot(corpus, &embeddings, &cfg)?)
        }
        Method::Upperbound => {
            return Err(Error::Usage("upperbound is an evaluation protocol; use `experiment`".into()))
        }
    };
    let method = match (&body, cfg.variant) {
        (ModelBody::Funnel(_), Variant::Kfcv) if a.method != Method::Zeroshot => "fun_kfcv",
        (ModelBody::Funnel(_), Variant::Tat) if a.method != Method::Zeroshot => "fun_tat",
        _ => a.method.name(),
    };
    ModelFile::new(method, body).save(&a.out)?;
    say(stdout, &format!("wrote {}", a.out.display()));
    Ok(())
}

fn split_of(corpus: &MultilingualCorpus, split: Split) -> &BTreeMap<String, LanguageDataset> {
    match split {
        Split::Train => corpus.train(),
        Split::Test => corpus.test(),
    }
}

fn predict_cmd(a: PredictArgs, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let model = ModelFile::load(&a.model)?;
    let loaded = load_corpus(&a.manifest)?;
    let zero_shot = matches!(&model.model, ModelBody::Funnel(m) if m.zero_shot.is_some());
    let embeddings = if zero_shot { loaded.embeddings(a.embeddings.as_deref())? } else { BTreeMap::new() };
    let mut records = Vec::new();
    for (lang, ds) in split_of(&loaded.corpus, a.split) {
        for d in ds.documents() {
            let (posterior, labels) = match &model.model {
                ModelBody::Naive(m) => (None, predict_naive(m, lang, d)?),
                ModelBody::Funnel(m) if zero_shot => {
                    let p = predict_zeroshot(m, lang, d, embeddings.get(lang))?;
                    (Some(p.posterior), p.decisions)
                }
                ModelBody::Funnel(m) => {
                    let p = predict(m, lang, d)?;
                    (Some(p.posterior), p.decisions)
                }
            };
            records.push(PredictionRecord { doc_id: d.id.clone(), language: lang.clone(), posterior, labels });
        }
    }
    write_predictions(&a.out, &records)?;
    say(stdout, &format!("wrote {} predictions to {}", records.len(), a.out.display()));
    Ok(())
}

fn evaluate(a: EvaluateArgs, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let records = read_predictions(&a.predictions)?;
    let loaded = load_corpus(&a.manifest)?;
    let corpus = &loaded.corpus;
    let mut by_id: HashMap<&str, &PredictionRecord> = HashMap::with_capacity(records.len());
    for r in &records {
        by_id.insert(r.doc_id.as_str(), r);
    }
    let mut counts = BTreeMap::new();
    let mut matched = 0usize;
    for (lang, ds) in split_of(corpus, a.split) {
        let mut pred = Vec::with_capacity(ds.len());
        for d in ds.documents() {
            let r = by_id.get(d.id.as_str()).ok_or_else(|| Error::MissingPrediction(d.id.clone()))?;
            pred.push(r.labels.clone());
        }
        matched += ds.len();
        counts.insert(lang.clone(), confusion(&ds.labels(), &pred, corpus.n_classes())?);
    }
    if matched != records.len() || by_id.len() != records.len() {
        let known: std::collections::HashSet<&str> = split_of(corpus, a.split)
            .values()
            .flat_map(|ds| ds.documents().iter().map(|d| d.id.as_str()))
            .collect();
        let extra = records
            .iter()
            .find(|r| !known.contains(r.doc_id.as_str()))
            .map_or_else(|| "duplicate id".to_string(), |r| r.doc_id.clone());
        return Err(Error::UnknownDocument(extra));
    }
    let dataset = a.manifest.parent().and_then(Path::file_name).map_or("corpus".into(), |s| s.to_string_lossy().into_owned());
    let mut template = meta("predictions", &FunnelConfig::default(), &dataset, 0);
    template.variant = String::new();
    template.mode = String::new();
    let reports: Vec<EvalReport> = reports(&template, &counts, corpus.n_classes())?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    write_eval_csv(&a.out.join("evaluation.csv"), &reports)?;
    write_json(&a.out.join("evaluation.json"), &reports)?;
    for r in &reports {
        say(
            stdout,
            &format!(
                "{:<6} F1 micro {:.4} macro {:.4}  K micro {:.4} macro {:.4}",
                r.meta.language, r.f1_micro, r.f1_macro, r.k_micro, r.k_macro
            ),
        );
    }
    Ok(())
}

fn experiment(a: ExperimentArgs, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let spec = match &a.spec {
        Some(p) => read_json::<ExperimentSpec>(p)?,
        None => {
            let mut spec = ExperimentSpec::new(a.mode, a.source.source()?);
            spec.seed = a.seed;
            spec.funnel = a.funnel.config()?;
            if !a.methods.is_empty() {
                spec.methods = a.methods.clone();
            }
            if let Some(t) = a.trials {
                spec.trials = t;
            }
            if !a.fractions.is_empty() {
                spec.fractions = a.fractions.clone();
            }
            spec
        }
    };
    spec.validate()?;
    run_experiment(&spec, &a.out, &mut |line| say(stdout, line))
}

fn bench(a: BenchArgs, stdout: &mut (dyn Write + Send)) -> Result<()> {
    if a.trials == 0 {
        return Err(Error::Usage("trials must be >= 1".into()));
    }
    let rows = run_bench(&a.source.source()?, &a.methods, a.trials, a.seed, &a.funnel.config()?)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_csv(&a.out, &rows)?;
    for r in &rows {
        say(stdout, &format!("{:<12} {:<5} {:.3} ± {:.3} s", r.method, r.phase, r.mean_seconds, r.sd_seconds));
    }
    Ok(())
}
