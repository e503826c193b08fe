//! Prediction files: one tab-separated line per document,
//! `doc_id  language  p1,…,p|C|  labels`, with `-` for an absent posterior
//! (naive models) or an empty label set.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use funnel_core::corpus::LabelSet;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub doc_id: String,
    pub language: String,
    pub posterior: Option<Vec<f64>>,
    pub labels: LabelSet,
}

fn join<T: ToString>(items: impl Iterator<Item = T>) -> String {
    let parts: Vec<String> = items.map(|x| x.to_string()).collect();
    if parts.is_empty() {
        "-".into()
    } else {
        parts.join(",")
    }
}

pub fn write_predictions(path: &Path, records: &[PredictionRecord]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    for r in records {
        let posterior = match &r.posterior {
            // Debug formatting is the shortest exact form and switches to
            // exponent notation for tiny values.
            Some(p) if !p.is_empty() => p.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(","),
            _ => "-".into(),
        };
        writeln!(w, "{}\t{}\t{}\t{}", r.doc_id, r.language, posterior, join(r.labels.iter())).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { path: path.to_path_buf(), line: i + 1, message };
        let fields: Vec<&str> = line.split('\t').collect();
        let [doc_id, language, posterior, labels] = fields[..] else {
            return Err(err(format!("expected 4 tab-separated fields, found {}", fields.len())));
        };
        let posterior = if posterior == "-" {
            None
        } else {
            Some(
                posterior
                    .split(',')
                    .map(|t| t.parse::<f64>().map_err(|_| err(format!("bad posterior `{t}`"))))
                    .collect::<Result<Vec<_>>>()?,
            )
        };
        let labels = if labels == "-" {
            LabelSet::empty()
        } else {
            LabelSet::new(
                labels
                    .split(',')
                    .map(|t| t.parse::<usize>().map_err(|_| err(format!("bad class index `{t}`"))))
                    .collect::<Result<Vec<_>>>()?,
            )
        };
        out.push(PredictionRecord { doc_id: doc_id.into(), language: language.into(), posterior, labels });
    }
    Ok(out)
}
