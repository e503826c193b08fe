//! Binary and one-vs-rest linear learners, fold planning, regularization
//! selection, and the random Fourier feature map used in dense spaces.

mod folds;
mod logistic;
mod ovr;
mod rff;
mod rows;
mod select;

pub use folds::{kfold_split, FoldPlan};
pub use logistic::{objective, objective_and_gradient, raw_score, train_binary, train_binary_from, BinaryScorer, TrainConfig};
pub use ovr::{train_multilabel, train_multilabel_from, MultilabelClassifier, CONSTANT_POSITIVE_SCORE};
pub use rff::{rbf_feature_map, RbfFeatureMap};
pub use rows::{DenseMatrix, Row, Rows, SparseRows, Subset};
pub use select::{grid_search_reg, DEFAULT_GRID};
