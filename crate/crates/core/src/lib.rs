//! Funnelling: two-tier ensembles for heterogeneous multilabel classification.
//!
//! Documents written in different languages live in disjoint, language-specific
//! feature spaces. A first tier of per-language one-vs-rest classifiers maps each
//! document to a vector of calibrated posterior probabilities, one per class.
//! Those vectors share a single space regardless of the source language, so a
//! single meta-classifier can be trained on the pooled vectors of every language
//! and used to take the final decisions.
//!
//! The crate is `no_std` (it needs `alloc`). The `std` feature adds `std::error::Error`
//! integration and the `parallel` feature trains independent binary problems on
//! the rayon thread pool. Parallel and sequential builds produce bit-identical
//! models.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod calibrate;
pub mod corpus;
mod error;
pub mod features;
pub mod funnel;
pub mod learn;
pub(crate) mod math;
pub mod metrics;
pub(crate) mod par;
pub mod rng;
pub mod sparse;
pub mod synthetic;

pub use error::{Error, Result};
pub use sparse::SparseVector;
