//! Corpus manifests and the sparse dataset text format.
//!
//! A manifest is a JSON file listing the class inventory and, per language,
//! the vocabulary size and the train/test dataset files (paths relative to
//! the manifest). Dataset files hold one document per line:
//!
//! ```text
//! 0,3 12:2 40:1 # en-tr-00007
//! - 5:1 # en-tr-00008
//! ```
//!
//! The first token lists class indices (`-` for none), then `feature:count`
//! pairs with 0-based feature indices, then an optional `# doc_id` comment.
//! Documents without an id are named `{language}-{split}-{line}`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use funnel_core::corpus::{Alignment, Document, LabelSet, LanguageDataset, MultilingualCorpus};
use funnel_core::features::EmbeddingTable;
use funnel_core::SparseVector;
use serde::{Deserialize, Serialize};

use crate::embeddings_io::{read_embeddings, write_embeddings};
use crate::{Error, Result};

pub const MANIFEST_FORMAT: &str = "funnelling-corpus";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LanguageEntry {
    pub id: String,
    pub vocabulary_size: usize,
    pub train: String,
    pub test: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub class_names: Vec<String>,
    #[serde(default)]
    pub parallel: bool,
    pub languages: Vec<LanguageEntry>,
    /// JSON file mapping group id → language → doc id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<String>,
}

/// A loaded manifest together with its location.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub path: PathBuf,
    pub manifest: Manifest,
    pub corpus: MultilingualCorpus,
}

impl LoadedCorpus {
    fn resolve(&self, relative: &str) -> PathBuf {
        self.path.parent().unwrap_or(Path::new(".")).join(relative)
    }

    /// Embedding tables declared in the manifest, or read from
    /// `<dir>/<language>.vec` when `dir` is given.
    pub fn embeddings(&self, dir: Option<&Path>) -> Result<BTreeMap<String, EmbeddingTable>> {
        let mut out = BTreeMap::new();
        for entry in &self.manifest.languages {
            let path = match (dir, &entry.embeddings) {
                (Some(d), _) => d.join(format!("{}.vec", entry.id)),
                (None, Some(rel)) => self.resolve(rel),
                (None, None) => continue,
            };
            if dir.is_some() && !path.exists() {
                continue;
            }
            out.insert(entry.id.clone(), read_embeddings(&path)?);
        }
        Ok(out)
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| Error::format(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_corpus(manifest_path: &Path) -> Result<LoadedCorpus> {
    let manifest: Manifest = read_json(manifest_path)?;
    if manifest.format != MANIFEST_FORMAT || manifest.version != MANIFEST_VERSION {
        return Err(Error::format(
            manifest_path,
            format!(
                "unsupported manifest `{}` v{} (expected `{MANIFEST_FORMAT}` v{MANIFEST_VERSION})",
                manifest.format, manifest.version
            ),
        ));
    }
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let n_classes = manifest.class_names.len();
    let mut train = BTreeMap::new();
    let mut test = BTreeMap::new();
    for entry in &manifest.languages {
        let tr = read_dataset(&base.join(&entry.train), &entry.id, "tr", entry.vocabulary_size, n_classes)?;
        let te = read_dataset(&base.join(&entry.test), &entry.id, "te", entry.vocabulary_size, n_classes)?;
        train.insert(entry.id.clone(), tr);
        test.insert(entry.id.clone(), te);
    }
    let alignment: Option<Alignment> = match &manifest.alignment {
        Some(rel) => Some(read_json(&base.join(rel))?),
        None => None,
    };
    let corpus = MultilingualCorpus::new(manifest.class_names.clone(), train, test, manifest.parallel, alignment)
        .map_err(|e| Error::format(manifest_path, e))?;
    Ok(LoadedCorpus { path: manifest_path.to_path_buf(), manifest, corpus })
}

fn parse_line(line: &str, n_classes: usize) -> std::result::Result<(Option<String>, LabelSet, SparseVector), String> {
    let (body, id) = match line.split_once('#') {
        Some((b, c)) => (b, Some(c.trim().to_string()).filter(|s| !s.is_empty())),
        None => (line, None),
    };
    let mut tokens = body.split_whitespace();
    let label_token = tokens.next().ok_or("missing label field")?;
    let labels = if label_token == "-" {
        LabelSet::empty()
    } else {
        let members = label_token
            .split(',')
            .map(|t| t.parse::<usize>().map_err(|_| format!("bad class index `{t}`")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if let Some(&c) = members.iter().find(|&&c| c >= n_classes) {
            return Err(format!("class index {c} out of range ({n_classes} classes)"));
        }
        LabelSet::new(members)
    };
    let mut entries = Vec::new();
    for tok in tokens {
        let (f, v) = tok.split_once(':').ok_or_else(|| format!("expected feature:count, found `{tok}`"))?;
        let f: u32 = f.parse().map_err(|_| format!("bad feature index `{f}`"))?;
        let v: f64 = v.parse().map_err(|_| format!("bad count `{v}`"))?;
        entries.push((f, v));
    }
    let vector = SparseVector::from_unsorted(entries).map_err(|e| e.to_string())?;
    Ok((id, labels, vector))
}

pub fn read_dataset(
    path: &Path,
    language: &str,
    split: &str,
    vocabulary_size: usize,
    n_classes: usize,
) -> Result<LanguageDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, labels, vector) = parse_line(line, n_classes).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        })?;
        let id = id.unwrap_or_else(|| format!("{language}-{split}-{:05}", i + 1));
        docs.push(Document::new(id, vector, labels));
    }
    LanguageDataset::new(language, docs, vocabulary_size).map_err(|e| Error::format(path, e))
}

pub fn write_dataset(path: &Path, dataset: &LanguageDataset) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    for doc in dataset.documents() {
        if doc.labels.is_empty() {
            write!(w, "-").map_err(io)?;
        } else {
            let labels: Vec<String> = doc.labels.iter().map(|c| c.to_string()).collect();
            write!(w, "{}", labels.join(",")).map_err(io)?;
        }
        for (f, v) in doc.vector.iter() {
            write!(w, " {f}:{v}").map_err(io)?;
        }
        writeln!(w, " # {}", doc.id).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes datasets, optional embeddings and the manifest into `dir`;
/// returns the manifest path.
pub fn write_corpus(
    dir: &Path,
    corpus: &MultilingualCorpus,
    embeddings: Option<&BTreeMap<String, EmbeddingTable>>,
) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut languages = Vec::new();
    for lang in corpus.languages() {
        let train = format!("{lang}.train.txt");
        let test = format!("{lang}.test.txt");
        let tr = corpus.train_set(&lang)?;
        write_dataset(&dir.join(&train), tr)?;
        write_dataset(&dir.join(&test), corpus.test_set(&lang)?)?;
        let emb = match embeddings.and_then(|e| e.get(&lang)) {
            Some(table) => {
                let name = format!("{lang}.vec");
                write_embeddings(&dir.join(&name), table)?;
                Some(name)
            }
            None => None,
        };
        languages.push(LanguageEntry { id: lang, vocabulary_size: tr.vocabulary_size(), train, test, embeddings: emb });
    }
    let alignment = match corpus.alignment() {
        Some(a) => {
            write_json(&dir.join("alignment.json"), a)?;
            Some("alignment.json".to_string())
        }
        None => None,
    };
    let manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        version: MANIFEST_VERSION,
        class_names: corpus.class_names().to_vec(),
        parallel: corpus.is_parallel(),
        languages,
        alignment,
    };
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    Ok(path)
}
