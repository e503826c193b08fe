//! Versioned JSON model files.

use std::path::Path;

use funnel_core::funnel::{FunnelModel, NaiveModel};
use serde::{Deserialize, Serialize};

use crate::corpus_io::{read_json, write_json};
use crate::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "body", rename_all = "lowercase")]
#[allow(clippy::large_enum_variant)]
pub enum ModelBody {
    Funnel(FunnelModel),
    Naive(NaiveModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    /// Method name the model was trained for (`fun_tat`, `naive`, …).
    pub method: String,
    pub model: ModelBody,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

impl ModelFile {
    pub fn new(method: impl Into<String>, model: ModelBody) -> Self {
        Self { format_version: MODEL_FORMAT_VERSION, method: method.into(), model }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    /// Loads a model, refusing files written with another format version.
    pub fn load(path: &Path) -> Result<Self> {
        let probe: VersionProbe = read_json(path)?;
        if probe.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelVersion { found: probe.format_version, expected: MODEL_FORMAT_VERSION });
        }
        read_json(path)
    }
}
