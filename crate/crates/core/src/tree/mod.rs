//! CART decision trees and random forests over the nine binary features.

mod cart;
mod eval;
mod forest;
mod rng;
mod split;

pub use cart::{
    best_split, build_tree, gini, predict, ClassCounts, Classifier, Label, PathStep, Prediction, Result, TreeError,
    TreeModel, TreeNode, TreeParams,
};
pub use eval::{
    area_labels, evaluate, run_experiment, select, AreaSummary, EvalMode, ExperimentConfig, ExperimentReport, MeanStd,
    RunResult,
};
pub use forest::{argmax, gini_importance, train_forest, tree_importance, ForestModel, ForestParams};
pub use rng::{SeededRng, SPLIT_STREAM};
pub use split::{split_train_test, SplitSpec, TRAIN_RATIO};
