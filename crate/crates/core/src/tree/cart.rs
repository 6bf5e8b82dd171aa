use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Area, Feature, FeatureVector, FEATURE_COUNT};

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("empty label multiset")]
    EmptyLabels,
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("malformed tree: feature `{0}` tested twice on one path")]
    RepeatedFeature(Feature),
    #[error("empty evaluation set")]
    EmptyEvaluationSet,
    #[error("split needs 0 < ratio < 1 and at least one row per fold (n = {n}, ratio = {ratio})")]
    DegenerateSplit { n: usize, ratio: f64 },
}

pub type Result<T> = std::result::Result<T, TreeError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    NotSuitable,
    Suitable,
}

impl Label {
    pub fn from_flag(flag: bool) -> Label {
        if flag {
            Label::Suitable
        } else {
            Label::NotSuitable
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::NotSuitable => "not_suitable",
            Label::Suitable => "suitable",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::NotSuitable => "Not Suitable",
            Label::Suitable => "Suitable",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassCounts {
    pub not_suitable: usize,
    pub suitable: usize,
}

impl ClassCounts {
    pub fn of(labels: impl IntoIterator<Item = Label>) -> Self {
        let mut c = ClassCounts::default();
        for l in labels {
            c.add(l);
        }
        c
    }

    pub fn add(&mut self, l: Label) {
        match l {
            Label::NotSuitable => self.not_suitable += 1,
            Label::Suitable => self.suitable += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.not_suitable + self.suitable
    }

    pub fn is_pure(&self) -> bool {
        self.not_suitable == 0 || self.suitable == 0
    }

    /// Majority class; an even split is NotSuitable.
    pub fn majority(&self) -> Label {
        if self.suitable > self.not_suitable {
            Label::Suitable
        } else {
            Label::NotSuitable
        }
    }

    pub fn gini(&self) -> Option<f64> {
        let n = self.total() as f64;
        if n == 0.0 {
            return None;
        }
        let p = self.suitable as f64 / n;
        let q = self.not_suitable as f64 / n;
        Some(1.0 - p * p - q * q)
    }

    fn sum_sq(&self) -> u128 {
        let (a, b) = (self.not_suitable as u128, self.suitable as u128);
        a * a + b * b
    }
}

impl std::ops::Add for ClassCounts {
    type Output = ClassCounts;
    fn add(self, o: ClassCounts) -> ClassCounts {
        ClassCounts { not_suitable: self.not_suitable + o.not_suitable, suitable: self.suitable + o.suitable }
    }
}

/// Gini impurity `1 - Σ p_c²`.
pub fn gini(labels: &[Label]) -> Result<f64> {
    ClassCounts::of(labels.iter().copied()).gini().ok_or(TreeError::EmptyLabels)
}

/// Exact `Σ_child Σ_class count² / child_size`. Weighted child impurity equals
/// `1 - purity / n`, so comparing purities compares impurities without
/// floating-point ties.
#[derive(Debug, Clone, Copy)]
struct Purity {
    num: u128,
    den: u128,
}

impl Purity {
    fn of_node(c: ClassCounts) -> Purity {
        Purity { num: c.sum_sq(), den: c.total() as u128 }
    }

    fn of_split(l: ClassCounts, r: ClassCounts) -> Purity {
        let (nl, nr) = (l.total() as u128, r.total() as u128);
        Purity { num: l.sum_sq() * nr + r.sum_sq() * nl, den: nl * nr }
    }
}

impl PartialEq for Purity {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Purity {}
impl PartialOrd for Purity {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Purity {
    fn cmp(&self, o: &Self) -> Ordering {
        (self.num * o.den).cmp(&(o.num * self.den))
    }
}

fn partition_counts(rows: &[FeatureVector], labels: &[Label], idx: &[usize], f: usize) -> (ClassCounts, ClassCounts) {
    let (mut absent, mut present) = (ClassCounts::default(), ClassCounts::default());
    for &i in idx {
        if rows[i].0[f] {
            present.add(labels[i]);
        } else {
            absent.add(labels[i]);
        }
    }
    (absent, present)
}

fn best_split_on(
    rows: &[FeatureVector],
    labels: &[Label],
    idx: &[usize],
    candidates: &[usize],
    min_leaf: usize,
    allow_zero_gain: bool,
) -> Option<usize> {
    let parent = Purity::of_node(ClassCounts::of(idx.iter().map(|&i| labels[i])));
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut best: Option<(usize, Purity)> = None;
    for f in sorted {
        let (a, p) = partition_counts(rows, labels, idx, f);
        if a.total() < min_leaf.max(1) || p.total() < min_leaf.max(1) {
            continue;
        }
        let score = Purity::of_split(a, p);
        if score < parent || (score == parent && !allow_zero_gain) {
            continue;
        }
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((f, score));
        }
    }
    best.map(|(f, _)| f)
}

/// Feature index with the largest weighted Gini decrease among `candidates`.
/// Ties go to the lowest index; `None` when no split strictly lowers impurity.
pub fn best_split(rows: &[FeatureVector], labels: &[Label], candidates: &[usize]) -> Option<usize> {
    if rows.len() < 2 || rows.len() != labels.len() {
        return None;
    }
    let idx: Vec<usize> = (0..rows.len()).collect();
    best_split_on(rows, labels, &idx, candidates, 1, false)
}

/// Tree node. Serialises as `{feature, absent, present}` or `{label, counts}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Split { feature: Feature, absent: Box<TreeNode>, present: Box<TreeNode> },
    Leaf { label: Label, counts: ClassCounts },
}

impl TreeNode {
    pub fn leaf(counts: ClassCounts) -> TreeNode {
        TreeNode::Leaf { label: counts.majority(), counts }
    }

    /// Training samples that reached this node.
    pub fn counts(&self) -> ClassCounts {
        match self {
            TreeNode::Leaf { counts, .. } => *counts,
            TreeNode::Split { absent, present, .. } => absent.counts() + present.counts(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { absent, present, .. } => 1 + absent.depth().max(present.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { absent, present, .. } => absent.leaf_count() + present.leaf_count(),
        }
    }

    /// Every feature tested anywhere in the subtree, ascending.
    pub fn features_used(&self) -> Vec<Feature> {
        let mut out = Vec::new();
        self.visit_splits(&mut |f, _, _| out.push(f));
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Calls `visit(feature, absent_counts, present_counts)` for each split.
    pub fn visit_splits(&self, visit: &mut impl FnMut(Feature, ClassCounts, ClassCounts)) {
        if let TreeNode::Split { feature, absent, present } = self {
            visit(*feature, absent.counts(), present.counts());
            absent.visit_splits(visit);
            present.visit_splits(visit);
        }
    }

    /// Checks that no feature repeats along any root-to-leaf path.
    pub fn check_paths(&self) -> Result<()> {
        fn walk(n: &TreeNode, used: &mut [bool; FEATURE_COUNT]) -> Result<()> {
            if let TreeNode::Split { feature, absent, present } = n {
                let i = feature.index();
                if used[i] {
                    return Err(TreeError::RepeatedFeature(*feature));
                }
                used[i] = true;
                walk(absent, used)?;
                walk(present, used)?;
                used[i] = false;
            }
            Ok(())
        }
        walk(self, &mut [false; FEATURE_COUNT])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: FEATURE_COUNT, min_samples_leaf: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeModel {
    pub root: TreeNode,
    pub params: TreeParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area: Option<Area>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub feature: Feature,
    pub present: bool,
}

impl fmt::Display for PathStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.feature, if self.present { "present" } else { "absent" })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    pub path: Vec<PathStep>,
    pub counts: ClassCounts,
}

/// Anything that maps a feature vector to a verdict.
pub trait Classifier {
    fn classify(&self, x: &FeatureVector) -> Label;
}

impl TreeModel {
    pub fn predict(&self, x: &FeatureVector) -> Result<Prediction> {
        predict(self, x)
    }
}

impl Classifier for TreeModel {
    fn classify(&self, x: &FeatureVector) -> Label {
        classify_node(&self.root, x)
    }
}

pub(crate) fn classify_node(mut node: &TreeNode, x: &FeatureVector) -> Label {
    loop {
        match node {
            TreeNode::Leaf { label, .. } => return *label,
            TreeNode::Split { feature, absent, present } => {
                node = if x.get(*feature) { present } else { absent };
            }
        }
    }
}

/// Follows present/absent edges to a leaf, recording each test.
pub fn predict(t: &TreeModel, x: &FeatureVector) -> Result<Prediction> {
    let mut node = &t.root;
    let mut path = Vec::new();
    let mut used = [false; FEATURE_COUNT];
    loop {
        match node {
            TreeNode::Leaf { label, counts } => {
                return Ok(Prediction { label: *label, path, counts: *counts });
            }
            TreeNode::Split { feature, absent, present } => {
                if std::mem::replace(&mut used[feature.index()], true) {
                    return Err(TreeError::RepeatedFeature(*feature));
                }
                let bit = x.get(*feature);
                path.push(PathStep { feature: *feature, present: bit });
                node = if bit { present } else { absent };
            }
        }
    }
}

/// Supplies the candidate features considered at a node, given the features
/// not yet used on the path to it.
pub(crate) trait FeatureSampler {
    fn candidates(&mut self, available: &[usize]) -> Vec<usize>;
}

pub(crate) struct AllFeatures;

impl FeatureSampler for AllFeatures {
    fn candidates(&mut self, available: &[usize]) -> Vec<usize> {
        available.to_vec()
    }
}

pub(crate) fn grow(
    rows: &[FeatureVector],
    labels: &[Label],
    idx: &[usize],
    params: TreeParams,
    sampler: &mut impl FeatureSampler,
) -> TreeNode {
    fn rec(
        rows: &[FeatureVector],
        labels: &[Label],
        idx: &[usize],
        depth: usize,
        used: &mut [bool; FEATURE_COUNT],
        params: TreeParams,
        sampler: &mut impl FeatureSampler,
    ) -> TreeNode {
        let counts = ClassCounts::of(idx.iter().map(|&i| labels[i]));
        if counts.is_pure() || depth >= params.max_depth || idx.len() < 2 * params.min_samples_leaf.max(1) {
            return TreeNode::leaf(counts);
        }
        let available: Vec<usize> = (0..FEATURE_COUNT).filter(|&f| !used[f]).collect();
        let candidates = sampler.candidates(&available);
        let Some(f) = best_split_on(rows, labels, idx, &candidates, params.min_samples_leaf, true) else {
            return TreeNode::leaf(counts);
        };
        let (present, absent): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| rows[i].0[f]);
        used[f] = true;
        let a = rec(rows, labels, &absent, depth + 1, used, params, sampler);
        let p = rec(rows, labels, &present, depth + 1, used, params, sampler);
        used[f] = false;
        TreeNode::Split { feature: Feature::ALL[f], absent: Box::new(a), present: Box::new(p) }
    }
    rec(rows, labels, idx, 0, &mut [false; FEATURE_COUNT], params, sampler)
}

fn check_lengths(rows: &[FeatureVector], labels: &[Label]) -> Result<()> {
    if rows.len() != labels.len() {
        return Err(TreeError::LengthMismatch { rows: rows.len(), labels: labels.len() });
    }
    if rows.is_empty() {
        return Err(TreeError::EmptyTrainingSet);
    }
    Ok(())
}

/// Recursive CART with Gini impurity. A node becomes a leaf when it is pure,
/// at `max_depth`, or smaller than `2 * min_samples_leaf`. Otherwise it splits
/// on the candidate with the largest Gini decrease (lowest index on ties); if
/// no candidate strictly lowers impurity, an impure node still splits on the
/// lowest-index non-constant candidate, so interactions such as XOR remain
/// learnable. Only when every candidate is constant does it stop.
pub fn build_tree(rows: &[FeatureVector], labels: &[Label], params: TreeParams) -> Result<TreeModel> {
    check_lengths(rows, labels)?;
    let idx: Vec<usize> = (0..rows.len()).collect();
    Ok(TreeModel { root: grow(rows, labels, &idx, params, &mut AllFeatures), params, area: None, seed: None })
}

pub(crate) fn validate_training(rows: &[FeatureVector], labels: &[Label]) -> Result<()> {
    check_lengths(rows, labels)
}
