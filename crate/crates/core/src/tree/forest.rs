use serde::{Deserialize, Serialize};

use super::cart::{
    classify_node, grow, validate_training, ClassCounts, Classifier, FeatureSampler, Label, Result, TreeModel,
    TreeParams,
};
use super::rng::SeededRng;
use crate::dataset::{FeatureVector, FEATURE_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features drawn (without replacement) at every node from those not yet
    /// used on the path; all of them when fewer remain.
    pub features_per_split: usize,
    /// Resample the training rows with replacement for each tree. Turning this
    /// off is a test hook: every tree then sees the training set as given.
    pub bootstrap: bool,
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 100, features_per_split: 3, bootstrap: true, tree: TreeParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    pub importance: Vec<f64>,
    pub params: ForestParams,
    pub seed: u64,
}

struct RandomSubset<'a> {
    rng: &'a mut SeededRng,
    k: usize,
}

impl FeatureSampler for RandomSubset<'_> {
    fn candidates(&mut self, available: &[usize]) -> Vec<usize> {
        self.rng.choose_sorted(available, self.k)
    }
}

/// Random forest of CART trees. Tree `i` draws its bootstrap sample and its
/// per-node feature subsets from sub-stream `i` of `seed`, so each tree is
/// reproducible on its own.
pub fn train_forest(rows: &[FeatureVector], labels: &[Label], params: ForestParams, seed: u64) -> Result<ForestModel> {
    validate_training(rows, labels)?;
    let n = rows.len();
    let trees: Vec<TreeModel> = (0..params.n_trees)
        .map(|t| {
            let mut rng = SeededRng::with_stream(seed, t as u64);
            let idx: Vec<usize> =
                if params.bootstrap { (0..n).map(|_| rng.below(n)).collect() } else { (0..n).collect() };
            let mut sampler = RandomSubset { rng: &mut rng, k: params.features_per_split };
            TreeModel {
                root: grow(rows, labels, &idx, params.tree, &mut sampler),
                params: params.tree,
                area: None,
                seed: Some(seed),
            }
        })
        .collect();
    let mut forest = ForestModel { trees, importance: vec![0.0; FEATURE_COUNT], params, seed };
    forest.importance = gini_importance(&forest);
    Ok(forest)
}

fn split_decrease(node: ClassCounts, absent: ClassCounts, present: ClassCounts) -> f64 {
    let n = node.total() as f64;
    let g = |c: ClassCounts| c.gini().unwrap_or(0.0);
    g(node) - absent.total() as f64 / n * g(absent) - present.total() as f64 / n * g(present)
}

/// Unnormalised importance of one tree: for every split,
/// `(node samples / root samples) × Gini decrease`, accumulated per feature.
pub fn tree_importance(t: &TreeModel) -> [f64; FEATURE_COUNT] {
    let mut out = [0.0; FEATURE_COUNT];
    let total = t.root.counts().total() as f64;
    t.root.visit_splits(&mut |f, a, p| {
        let node = a + p;
        out[f.index()] += node.total() as f64 / total * split_decrease(node, a, p);
    });
    out
}

/// Per-tree importances summed over the forest and scaled to sum to 1.
/// All zeros when no tree split.
pub fn gini_importance(f: &ForestModel) -> Vec<f64> {
    let mut sum = [0.0; FEATURE_COUNT];
    for t in &f.trees {
        for (s, v) in sum.iter_mut().zip(tree_importance(t)) {
            *s += v;
        }
    }
    let total: f64 = sum.iter().sum();
    if total > 0.0 {
        sum.iter().map(|v| v / total).collect()
    } else {
        vec![0.0; FEATURE_COUNT]
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
}

impl ForestModel {
    pub fn votes(&self, x: &FeatureVector) -> ClassCounts {
        ClassCounts::of(self.trees.iter().map(|t| classify_node(&t.root, x)))
    }
}

impl Classifier for ForestModel {
    /// Majority vote; an even vote is NotSuitable.
    fn classify(&self, x: &FeatureVector) -> Label {
        self.votes(x).majority()
    }
}
