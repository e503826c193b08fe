use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use funnel_core::calibrate::CalibrationMode;
use funnel_core::corpus::subsample_training;
use funnel_core::funnel::{
    predict, predict_naive, predict_zeroshot, train_funnel, train_naive, train_zeroshot, EmptyLanguagePolicy,
    FunnelConfig, FunnelModel, NaiveModel,
};
use funnel_core::metrics::{confusion, mean_and_sd, pearson, EvalReport, Measure};
use rayon::prelude::*;
use serde::Serialize;

use super::{evaluate_languages, meta, reports, run_method, seconds, CorpusProvider, ExperimentSpec, Method, TrialData};
use crate::corpus_io::write_json;
use crate::report::{summarize, write_csv, write_summary, CsvAppender, EvalRow, GroupSummary, MEASURES};
use crate::Result;

type Log<'a> = &'a mut dyn FnMut(&str);
type Groups<'a> = Vec<(BTreeMap<String, String>, Vec<&'a EvalReport>)>;

/// Summaries comparing groups of reports within each language.
fn summarize_reports(all: &[EvalReport], fields: &[&str]) -> Vec<GroupSummary> {
    let mut partitions: BTreeMap<&str, Groups> = BTreeMap::new();
    for r in all {
        let mut key = BTreeMap::new();
        key.insert("language".to_string(), r.meta.language.clone());
        for &f in fields {
            let v = match f {
                "method" => &r.meta.method,
                "mode" => &r.meta.mode,
                "variant" => &r.meta.variant,
                _ => continue,
            };
            key.insert(f.to_string(), v.clone());
        }
        let groups = partitions.entry(r.meta.language.as_str()).or_default();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    partitions.values().flat_map(|groups| summarize(groups)).collect()
}

fn finish_reports(out: &Path, all: &[EvalReport], fields: &[&str], log: Log) -> Result<()> {
    write_json(&out.join("runs.json"), &all)?;
    let summaries = summarize_reports(all, fields);
    write_summary(out, "summary", &summaries)?;
    let pooled: Vec<GroupSummary> =
        summaries.into_iter().filter(|g| g.key.get("language").map(String::as_str) == Some("all")).collect();
    let mut buf = Vec::new();
    crate::report::print_summary(&mut buf, &pooled).ok();
    log(String::from_utf8_lossy(&buf).trim_end());
    Ok(())
}

fn run_trials<F>(spec: &ExperimentSpec, provider: &CorpusProvider, out: &Path, log: Log, per_trial: F) -> Result<Vec<EvalReport>>
where
    F: Fn(usize, &TrialData, &FunnelConfig) -> Result<Vec<EvalReport>>,
{
    let mut runs = CsvAppender::create(&out.join("runs.csv"))?;
    let mut all = Vec::new();
    for trial in 0..spec.trials {
        let data = provider.trial(spec.trial_seed(trial))?;
        let reports = per_trial(trial, &data, &spec.funnel_config(trial))?;
        runs.append(reports.iter().map(EvalRow::from))?;
        log(&format!("trial {}/{} done", trial + 1, spec.trials));
        all.extend(reports);
    }
    Ok(all)
}

pub(super) fn mlclc(spec: &ExperimentSpec, provider: &CorpusProvider, out: &Path, log: Log) -> Result<()> {
    let all = run_trials(spec, provider, out, log, |trial, data, cfg| {
        let results = spec
            .methods
            .par_iter()
            .map(|&m| run_method(m, data, cfg, trial))
            .collect::<Result<Vec<_>>>()?;
        Ok(results.into_iter().flatten().collect())
    })?;
    finish_reports(out, &all, &["method"], log)
}

#[derive(Debug, Clone, Copy)]
enum MonoCell {
    Naive,
    Full,
    Monolingual,
    Binary,
}

fn mono_cell(cell: MonoCell, data: &TrialData, cfg: &FunnelConfig, trial: usize) -> Result<Vec<EvalReport>> {
    let corpus = &data.corpus;
    let n = corpus.n_classes();
    let languages: Vec<String> = corpus.test().keys().cloned().collect();
    match cell {
        MonoCell::Naive => run_method(Method::Naive, data, cfg, trial),
        MonoCell::Full => run_method(Method::FunTat, data, cfg, trial),
        MonoCell::Monolingual => {
            let mut template = meta("fun_tat_mono", cfg, &data.dataset, trial);
            let mut counts = BTreeMap::new();
            for lang in &languages {
                let t = Instant::now();
                let mono = corpus.only_language(lang)?;
                let model = train_funnel(&mono, cfg)?;
                template.train_seconds += seconds(t);
                let t = Instant::now();
                counts.extend(evaluate_languages(&mono, std::slice::from_ref(lang), |l, d| {
                    Ok(predict(&model, l, d)?.decisions)
                })?);
                template.test_seconds += seconds(t);
            }
            reports(&template, &counts, n)
        }
        MonoCell::Binary => {
            let mut template = meta("fun_tat_binary", cfg, &data.dataset, trial);
            let mut counts: BTreeMap<String, Vec<_>> =
                languages.iter().map(|l| (l.clone(), vec![Default::default(); n])).collect();
            for class in 0..n {
                let t = Instant::now();
                let binary = corpus.only_class(class)?;
                let model = train_funnel(&binary, cfg)?;
                template.train_seconds += seconds(t);
                let t = Instant::now();
                let c = evaluate_languages(&binary, &languages, |l, d| Ok(predict(&model, l, d)?.decisions))?;
                template.test_seconds += seconds(t);
                for (lang, per_class) in c {
                    counts.get_mut(&lang).expect("test language")[class] = per_class[0];
                }
            }
            reports(&template, &counts, n)
        }
    }
}

pub(super) fn mono_binary(spec: &ExperimentSpec, provider: &CorpusProvider, out: &Path, log: Log) -> Result<()> {
    let cells = [MonoCell::Naive, MonoCell::Monolingual, MonoCell::Binary, MonoCell::Full];
    let all = run_trials(spec, provider, out, log, |trial, data, cfg| {
        let results =
            cells.par_iter().map(|&c| mono_cell(c, data, cfg, trial)).collect::<Result<Vec<_>>>()?;
        Ok(results.into_iter().flatten().collect())
    })?;
    finish_reports(out, &all, &["method"], log)
}

pub(super) fn calibration(spec: &ExperimentSpec, provider: &CorpusProvider, out: &Path, log: Log) -> Result<()> {
    let all = run_trials(spec, provider, out, log, |trial, data, cfg| {
        let results = CalibrationMode::ALL
            .par_iter()
            .map(|&mode| run_method(Method::FunTat, data, &cfg.clone().with_mode(mode), trial))
            .collect::<Result<Vec<_>>>()?;
        Ok(results.into_iter().flatten().collect())
    })?;
    finish_reports(out, &all, &["method", "mode"], log)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub trial: usize,
    pub target: String,
    pub fraction: f64,
    pub method: String,
    pub f1_micro: f64,
    pub f1_macro: f64,
    pub k_micro: f64,
    pub k_macro: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSummary {
    pub target: String,
    pub fraction: f64,
    pub measure: String,
    pub naive: f64,
    pub fun_tat: f64,
    /// (fun_tat − naive) / |naive|; absent when the naive mean is 0.
    pub relative_improvement: Option<f64>,
}

pub(crate) fn relative_improvement(new: f64, base: f64) -> Option<f64> {
    (base != 0.0).then(|| (new - base) / base.abs())
}

fn curve_row(trial: usize, target: &str, fraction: f64, method: &str, r: &EvalReport) -> CurveRow {
    CurveRow {
        trial,
        target: target.into(),
        fraction,
        method: method.into(),
        f1_micro: r.f1_micro,
        f1_macro: r.f1_macro,
        k_micro: r.k_micro,
        k_macro: r.k_macro,
    }
}

fn target_report<F>(data: &TrialData, cfg: &FunnelConfig, trial: usize, target: &str, method: &str, decide: F) -> Result<EvalReport>
where
    F: Fn(&str, &funnel_core::corpus::Document) -> Result<funnel_core::corpus::LabelSet>,
{
    let corpus = &data.corpus;
    let counts = evaluate_languages(corpus, &[target.to_string()], decide)?;
    let mut m = meta(method, cfg, &data.dataset, trial);
    m.language = target.into();
    Ok(EvalReport::from_counts(m, counts.into_values().next().unwrap_or_default())?)
}

/// Funnelling and naive reports on `target` after keeping `fraction` of its
/// training data. Fully retained targets reuse the models in `full`.
fn curve_cell(
    data: &TrialData,
    cfg: &FunnelConfig,
    trial: usize,
    seed: u64,
    target: &str,
    fraction: f64,
    full: Option<&(FunnelModel, NaiveModel)>,
) -> Result<Vec<CurveRow>> {
    let (fun, naive) = match full {
        Some((f, nv)) if fraction >= 1.0 => (f.clone(), nv.clone()),
        _ => {
            let sub = subsample_training(&data.corpus, target, fraction, seed)?;
            let fun = train_funnel(&sub, cfg)?;
            let naive = train_naive(&sub.only_language(target)?, cfg)?;
            (fun, naive)
        }
    };
    let f = target_report(data, cfg, trial, target, "fun_tat", |l, d| Ok(predict(&fun, l, d)?.decisions))?;
    let nv = target_report(data, cfg, trial, target, "naive", |l, d| Ok(predict_naive(&naive, l, d)?))?;
    Ok(vec![curve_row(trial, target, fraction, "naive", &nv), curve_row(trial, target, fraction, "fun_tat", &f)])
}

fn tolerant(cfg: &FunnelConfig) -> FunnelConfig {
    FunnelConfig { empty_language: EmptyLanguagePolicy::TrivialRejector, ..cfg.clone() }
}

pub(super) fn curves(spec: &ExperimentSpec, provider: &CorpusProvider, out: &Path, log: Log) -> Result<()> {
    let mut runs = CsvAppender::create(&out.join("curves.csv"))?;
    let mut rows = Vec::new();
    for trial in 0..spec.trials {
        let seed = spec.trial_seed(trial);
        let data = provider.trial(seed)?;
        let cfg = tolerant(&spec.funnel_config(trial));
        let targets: Vec<String> = data.corpus.train().keys().cloned().collect();
        let full = if spec.fractions.contains(&1.0) {
            Some((train_funnel(&data.corpus, &cfg)?, train_naive(&data.corpus, &cfg)?))
        } else {
            None
        };
        let cells: Vec<(String, f64)> =
            targets.iter().flat_map(|t| spec.fractions.iter().map(move |&f| (t.clone(), f))).collect();
        let results = cells
            .par_iter()
            .map(|(t, f)| curve_cell(&data, &cfg, trial, seed, t, *f, full.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let trial_rows: Vec<CurveRow> = results.into_iter().flatten().collect();
        runs.append(&trial_rows)?;
        log(&format!("trial {}/{} done", trial + 1, spec.trials));
        rows.extend(trial_rows);
    }
    let summary = curve_summary(&rows);
    write_json(&out.join("curves.json"), &rows)?;
    write_json(&out.join("curves_summary.json"), &summary)?;
    write_csv(&out.join("curves_summary.csv"), &summary)?;
    for s in summary.iter().filter(|s| s.measure == "f1_macro") {
        log(&format!(
            "{} @ {:.2}: naive {:.3} fun_tat {:.3} relative {}",
            s.target,
            s.fraction,
            s.naive,
            s.fun_tat,
            s.relative_improvement.map_or("n/a".into(), |r| format!("{:+.1}%", 100.0 * r))
        ));
    }
    Ok(())
}

/// Means over trials per (target, fraction, measure), in first-seen order.
pub fn curve_summary(rows: &[CurveRow]) -> Vec<CurveSummary> {
    let mut keys: Vec<(String, f64)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|(t, f)| *t == r.target && *f == r.fraction) {
            keys.push((r.target.clone(), r.fraction));
        }
    }
    let mut out = Vec::new();
    for (target, fraction) in keys {
        for (name, measure, micro) in MEASURES {
            let mean_of = |method: &str| {
                let v: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.target == target && r.fraction == fraction && r.method == method)
                    .map(|r| match (measure, micro) {
                        (Measure::F1, true) => r.f1_micro,
                        (Measure::F1, false) => r.f1_macro,
                        (Measure::K, true) => r.k_micro,
                        (Measure::K, false) => r.k_macro,
                    })
                    .collect();
                mean_and_sd(&v).0
            };
            let (naive, fun_tat) = (mean_of("naive"), mean_of("fun_tat"));
            out.push(CurveSummary {
                target: target.clone(),
                fraction,
                measure: name.into(),
                naive,
                fun_tat,
                relative_improvement: relative_improvement(fun_tat, naive),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct AblationRow {
    trial: usize,
    target: String,
    removed: String,
    f1_macro: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub rho: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationReport {
    pub languages: Vec<String>,
    /// `improvement[s][t]`: mean relative F1^M improvement on target `t`
    /// from adding the training data of source `s`; the diagonal is absent.
    pub improvement: Vec<Vec<Option<f64>>>,
    /// Contribution of each source: mean of its row off the diagonal.
    pub contribution: Vec<f64>,
    /// Benefit of each target: mean of its column off the diagonal.
    pub benefit: Vec<f64>,
    /// Naive F1^M per language on full training data, mean over trials.
    pub naive_f1_macro: Vec<f64>,
    pub contribution_vs_naive: Option<CorrelationReport>,
    pub benefit_vs_naive: Option<CorrelationReport>,
}

impl AblationReport {
    /// Builds the aggregates from the improvement matrix.
    pub fn from_matrix(languages: Vec<String>, improvement: Vec<Vec<Option<f64>>>, naive_f1_macro: Vec<f64>) -> Self {
        let l = languages.len();
        let mean_off_diagonal = |values: Vec<f64>| {
            if values.is_empty() {
                0.0
            } else {
                values.iter().sum::<f64>() / values.len() as f64
            }
        };
        let contribution: Vec<f64> = (0..l)
            .map(|s| mean_off_diagonal((0..l).filter(|&t| t != s).filter_map(|t| improvement[s][t]).collect()))
            .collect();
        let benefit: Vec<f64> = (0..l)
            .map(|t| mean_off_diagonal((0..l).filter(|&s| s != t).filter_map(|s| improvement[s][t]).collect()))
            .collect();
        let corr = |x: &[f64]| pearson(x, &naive_f1_macro).ok().map(|c| CorrelationReport { rho: c.rho, p: c.p });
        Self {
            contribution_vs_naive: corr(&contribution),
            benefit_vs_naive: corr(&benefit),
            languages,
            improvement,
            contribution,
            benefit,
            naive_f1_macro,
        }
    }
}

pub(super) fn ablation(spec: &ExperimentSpec, provider: &CorpusProvider, out: &Path, log: Log) -> Result<()> {
    let mut runs = CsvAppender::create(&out.join("ablation_runs.csv"))?;
    let mut languages: Vec<String> = Vec::new();
    let mut sums: Vec<Vec<f64>> = Vec::new();
    let mut counts: Vec<Vec<usize>> = Vec::new();
    let mut naive_sum: Vec<f64> = Vec::new();
    for trial in 0..spec.trials {
        let seed = spec.trial_seed(trial);
        let data = provider.trial(seed)?;
        let cfg = tolerant(&spec.funnel_config(trial));
        let langs: Vec<String> = data.corpus.train().keys().cloned().collect();
        if trial == 0 {
            languages = langs.clone();
            sums = vec![vec![0.0; langs.len()]; langs.len()];
            counts = vec![vec![0; langs.len()]; langs.len()];
            naive_sum = vec![0.0; langs.len()];
        } else if langs != languages {
            return Err(crate::Error::Usage("trial corpora have different languages".into()));
        }
        let naive = run_method(Method::Naive, &data, &cfg, trial)?;
        for (i, l) in languages.iter().enumerate() {
            naive_sum[i] += naive.iter().find(|r| &r.meta.language == l).map_or(0.0, |r| r.f1_macro);
        }
        let cells: Vec<(usize, Option<usize>)> = (0..langs.len())
            .flat_map(|t| std::iter::once((t, None)).chain((0..langs.len()).filter(move |&s| s != t).map(move |s| (t, Some(s)))))
            .collect();
        let results = cells
            .par_iter()
            .map(|&(t, s)| {
                let target = &langs[t];
                let mut sub = subsample_training(&data.corpus, target, spec.ablation_fraction, seed)?;
                if let Some(s) = s {
                    let keep: Vec<String> = langs.iter().filter(|l| **l != langs[s]).cloned().collect();
                    sub = sub.with_train_languages(&keep);
                }
                let model = train_funnel(&sub, &cfg)?;
                let r = target_report(&data, &cfg, trial, target, "fun_tat", |l, d| Ok(predict(&model, l, d)?.decisions))?;
                Ok(r.f1_macro)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut full = vec![0.0; langs.len()];
        let mut rows = Vec::new();
        for (&(t, s), &v) in cells.iter().zip(&results) {
            rows.push(AblationRow {
                trial,
                target: langs[t].clone(),
                removed: s.map_or("-".into(), |s| langs[s].clone()),
                f1_macro: v,
            });
            if s.is_none() {
                full[t] = v;
            }
        }
        for (&(t, s), &without) in cells.iter().zip(&results) {
            if let Some(s) = s {
                // Fall back to the absolute difference when the ablated run scores 0.
                sums[s][t] += relative_improvement(full[t], without).unwrap_or(full[t] - without);
                counts[s][t] += 1;
            }
        }
        runs.append(&rows)?;
        log(&format!("trial {}/{} done", trial + 1, spec.trials));
    }
    let l = languages.len();
    let improvement: Vec<Vec<Option<f64>>> = (0..l)
        .map(|s| (0..l).map(|t| (s != t && counts[s][t] > 0).then(|| sums[s][t] / counts[s][t] as f64)).collect())
        .collect();
    let naive: Vec<f64> = naive_sum.iter().map(|v| v / spec.trials as f64).collect();
    let report = AblationReport::from_matrix(languages, improvement, naive);
    write_json(&out.join("ablation.json"), &report)?;
    #[derive(Serialize)]
    struct Row<'a> {
        language: &'a str,
        contribution: f64,
        benefit: f64,
        naive_f1_macro: f64,
    }
    write_csv(
        &out.join("ablation.csv"),
        report.languages.iter().enumerate().map(|(i, lang)| Row {
            language: lang,
            contribution: report.contribution[i],
            benefit: report.benefit[i],
            naive_f1_macro: report.naive_f1_macro[i],
        }),
    )?;
    for (name, c) in [("contribution", report.contribution_vs_naive), ("benefit", report.benefit_vs_naive)] {
        match c {
            Some(c) => log(&format!("{name} vs naive F1^M: rho {:+.3} (p {:.3})", c.rho, c.p)),
            None => log(&format!("{name} vs naive F1^M: undefined")),
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroShotRow {
    pub trial: usize,
    pub n_train_languages: usize,
    pub language: String,
    pub seen: bool,
    pub f1_micro: f64,
    pub f1_macro: f64,
    pub k_micro: f64,
    pub k_macro: f64,
    /// Mean tier-1 posterior over documents and classes.
    pub mean_posterior: f64,
    /// Mean over documents of the largest tier-1 posterior.
    pub mean_max_posterior: f64,
}

pub(super) fn zeroshot(spec: &ExperimentSpec, provider: &CorpusProvider, out: &Path, log: Log) -> Result<()> {
    let mut runs = CsvAppender::create(&out.join("zeroshot.csv"))?;
    let mut rows = Vec::new();
    for trial in 0..spec.trials {
        let data = provider.trial(spec.trial_seed(trial))?;
        let cfg = spec.funnel_config(trial);
        let mut langs: Vec<String> = data.corpus.train().keys().cloned().collect();
        langs.sort();
        let results = (1..=langs.len())
            .into_par_iter()
            .map(|m| {
                let prefix = &langs[..m];
                let sub = data.corpus.with_train_languages(prefix);
                let model = train_zeroshot(&sub, &data.embeddings, &cfg)?;
                let mut cell = Vec::new();
                for lang in data.corpus.test().keys() {
                    let test = data.corpus.test_set(lang)?;
                    let preds = test
                        .documents()
                        .iter()
                        .map(|d| predict_zeroshot(&model, lang, d, data.embeddings.get(lang)))
                        .collect::<funnel_core::Result<Vec<_>>>()?;
                    let decisions: Vec<_> = preds.iter().map(|p| p.decisions.clone()).collect();
                    let m_meta = meta(Method::Zeroshot.name(), &cfg, &data.dataset, trial);
                    let r = EvalReport::from_counts(m_meta, confusion(&test.labels(), &decisions, data.corpus.n_classes())?)?;
                    let docs = preds.len().max(1) as f64;
                    let mean_posterior = preds
                        .iter()
                        .map(|p| p.posterior.iter().sum::<f64>() / p.posterior.len().max(1) as f64)
                        .sum::<f64>()
                        / docs;
                    let mean_max_posterior =
                        preds.iter().map(|p| p.posterior.iter().copied().fold(0.0, f64::max)).sum::<f64>() / docs;
                    cell.push(ZeroShotRow {
                        trial,
                        n_train_languages: m,
                        language: lang.clone(),
                        seen: prefix.contains(lang),
                        f1_micro: r.f1_micro,
                        f1_macro: r.f1_macro,
                        k_micro: r.k_micro,
                        k_macro: r.k_macro,
                        mean_posterior,
                        mean_max_posterior,
                    });
                }
                Ok(cell)
            })
            .collect::<Result<Vec<_>>>()?;
        let trial_rows: Vec<ZeroShotRow> = results.into_iter().flatten().collect();
        runs.append(&trial_rows)?;
        log(&format!("trial {}/{} done", trial + 1, spec.trials));
        rows.extend(trial_rows);
    }
    write_json(&out.join("zeroshot.json"), &rows)?;
    let steps = rows.iter().map(|r| r.n_train_languages).max().unwrap_or(0);
    for m in 1..=steps {
        let k: Vec<f64> = rows.iter().filter(|r| r.n_train_languages == m && !r.seen).map(|r| r.k_micro).collect();
        if !k.is_empty() {
            log(&format!("{m} training languages: unseen K micro {:.3}", mean_and_sd(&k).0));
        }
    }
    Ok(())
}
