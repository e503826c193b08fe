use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid sparse vector: {0}")]
    InvalidVector(String),
    #[error("feature index {index} out of range for vocabulary of size {vocabulary_size}")]
    FeatureOutOfRange { index: u32, vocabulary_size: usize },
    #[error("class index {index} not in class inventory of size {n_classes}")]
    UnknownClass { index: usize, n_classes: usize },
    #[error("duplicate document id `{0}`")]
    DuplicateDocId(String),
    #[error("unknown language `{0}`")]
    UnknownLanguage(String),
    #[error("empty training set for language `{0}`")]
    EmptyTrainingSet(String),
    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("infeasible prevalence for class {class}: expected {expected:.3} positive training examples")]
    InfeasiblePrevalence { class: usize, expected: f64 },
    #[error("labels contain a single class; a trivial scorer is required")]
    SingleClass,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("negative occurrence count for feature {0}")]
    NegativeCount(u32),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("corpus is not parallel")]
    NotParallel,
    #[error("alignment group `{group}` has no document in pivot language `{language}`")]
    MissingPivot { group: String, language: String },
    #[error("document `{0}` is not part of any alignment group")]
    Unaligned(String),
    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no embedding table for language `{0}`")]
    MissingEmbeddings(String),
    #[error("model has no zero-shot branch for unseen language `{0}`")]
    NoZeroShotBranch(String),
    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
