//! CSV and JSON report writers and the across-trial summaries.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use funnel_core::metrics::{mean_and_sd, paired_ttest, EvalReport, Measure};
use serde::Serialize;

use crate::corpus_io::write_json;
use crate::{Error, Result};

/// One flat CSV row per [`EvalReport`].
#[derive(Debug, Clone, Serialize)]
pub struct EvalRow<'a> {
    pub method: &'a str,
    pub variant: &'a str,
    pub mode: &'a str,
    pub dataset: &'a str,
    pub trial: u64,
    pub language: &'a str,
    pub f1_micro: f64,
    pub f1_macro: f64,
    pub k_micro: f64,
    pub k_macro: f64,
    pub train_seconds: f64,
    pub test_seconds: f64,
}

impl<'a> From<&'a EvalReport> for EvalRow<'a> {
    fn from(r: &'a EvalReport) -> Self {
        Self {
            method: &r.meta.method,
            variant: &r.meta.variant,
            mode: &r.meta.mode,
            dataset: &r.meta.dataset,
            trial: r.meta.trial,
            language: &r.meta.language,
            f1_micro: r.f1_micro,
            f1_macro: r.f1_macro,
            k_micro: r.k_micro,
            k_macro: r.k_macro,
            train_seconds: r.meta.train_seconds,
            test_seconds: r.meta.test_seconds,
        }
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_eval_csv(path: &Path, reports: &[EvalReport]) -> Result<()> {
    write_csv(path, reports.iter().map(EvalRow::from))
}

/// CSV file flushed after every batch of rows, so partial results survive
/// an aborted run.
pub struct CsvAppender {
    writer: csv::Writer<fs::File>,
    path: std::path::PathBuf,
}

impl CsvAppender {
    pub fn create(path: &Path) -> Result<Self> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(Self { writer: csv::Writer::from_writer(file), path: path.to_path_buf() })
    }

    pub fn append<T: Serialize>(&mut self, rows: impl IntoIterator<Item = T>) -> Result<()> {
        for row in rows {
            self.writer.serialize(row)?;
        }
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub const MEASURES: [(&str, Measure, bool); 4] = [
    ("f1_micro", Measure::F1, true),
    ("f1_macro", Measure::F1, false),
    ("k_micro", Measure::K, true),
    ("k_macro", Measure::K, false),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureSummary {
    pub measure: String,
    pub values: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    /// Whether this group has the best mean for the measure.
    pub best: bool,
    /// Paired t-test p-value against the best group (absent for the best
    /// group itself or with fewer than two trials).
    pub p_value_vs_best: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    /// Grouping key, e.g. method and language.
    pub key: BTreeMap<String, String>,
    pub trials: usize,
    pub measures: Vec<MeasureSummary>,
}

#[derive(Debug, Clone, Serialize)]
struct SummaryRow<'a> {
    group: String,
    trials: usize,
    measure: &'a str,
    mean: f64,
    sd: f64,
    best: bool,
    p_value_vs_best: Option<f64>,
}

/// Summarizes per-trial values of groups that are compared against each
/// other (for instance the methods evaluated on one language).
///
/// Each group pairs a key with one report per trial, in trial order. The
/// best group per measure is tested against every other group with a paired
/// t-test over trials.
pub fn summarize(groups: &[(BTreeMap<String, String>, Vec<&EvalReport>)]) -> Vec<GroupSummary> {
    let values = |reports: &[&EvalReport], measure: Measure, micro: bool| -> Vec<f64> {
        reports.iter().map(|r| r.value(measure, micro)).collect()
    };
    let mut out: Vec<GroupSummary> = groups
        .iter()
        .map(|(key, reports)| GroupSummary {
            key: key.clone(),
            trials: reports.len(),
            measures: MEASURES
                .iter()
                .map(|&(name, m, micro)| {
                    let v = values(reports, m, micro);
                    let (mean, sd) = mean_and_sd(&v);
                    MeasureSummary { measure: name.into(), values: v, mean, sd, best: false, p_value_vs_best: None }
                })
                .collect(),
        })
        .collect();
    for mi in 0..MEASURES.len() {
        let Some(best) = (0..out.len()).max_by(|&a, &b| {
            out[a].measures[mi].mean.total_cmp(&out[b].measures[mi].mean).then(b.cmp(&a))
        }) else {
            continue;
        };
        out[best].measures[mi].best = true;
        let best_values = out[best].measures[mi].values.clone();
        for (gi, g) in out.iter_mut().enumerate() {
            if gi != best {
                let m = &mut g.measures[mi];
                m.p_value_vs_best = paired_ttest(&best_values, &m.values).ok().map(|t| t.p);
            }
        }
    }
    out
}

pub fn write_summary(dir: &Path, stem: &str, summaries: &[GroupSummary]) -> Result<()> {
    write_json(&dir.join(format!("{stem}.json")), &summaries)?;
    let rows = summaries.iter().flat_map(|g| {
        let group = g.key.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";");
        g.measures.iter().map(move |m| SummaryRow {
            group: group.clone(),
            trials: g.trials,
            measure: &m.measure,
            mean: m.mean,
            sd: m.sd,
            best: m.best,
            p_value_vs_best: m.p_value_vs_best,
        })
    });
    write_csv(&dir.join(format!("{stem}.csv")), rows)
}

/// Prints a human-readable line per summary group.
pub fn print_summary(out: &mut impl Write, summaries: &[GroupSummary]) -> std::io::Result<()> {
    for g in summaries {
        let key = g.key.values().cloned().collect::<Vec<_>>().join(" ");
        write!(out, "{key:<28}")?;
        for m in &g.measures {
            let mark = if m.best { "*" } else { " " };
            write!(out, "  {} {:.3}±{:.3}{mark}", m.measure, m.mean, m.sd)?;
        }
        writeln!(out)?;
    }
    Ok(())
}
