//! CART-style binary decision tree (the pipeline's final classifier) plus
//! random-forest and AdaBoost baselines built from the same primitives.

mod adaboost;
mod cart;
mod forest;

pub use adaboost::{fit_adaboost, predict_adaboost, AdaBoostModel, Stump};
pub use cart::{fit_tree, gini, predict_tree, predict_tree_row, TreeHyper, TreeNode};
pub use forest::{fit_random_forest, predict_forest, FeatureSubset, ForestConfig, ForestModel};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("node has no samples")]
    EmptyNode,
    #[error("feature count mismatch: expected at least {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("both classes are required for fitting")]
    SingleClassDataset,
}
