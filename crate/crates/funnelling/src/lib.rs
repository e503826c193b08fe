//! File formats, command-line interface and experiment harness for
//! funnelling classifiers built on `funnel-core`.

pub mod cli;
pub mod corpus_io;
pub mod embeddings_io;
mod error;
pub mod harness;
pub mod model_io;
pub mod predictions;
pub mod report;

pub use error::{Error, Result};
pub use funnel_core;
