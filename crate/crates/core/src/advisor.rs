//! Per-area suitability models: training, a canonical JSON bundle, and
//! prediction / what-if queries with decision paths.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::dataset::{Area, Feature, FeatureMatrix, FeatureVector, AREA_COUNT, FEATURE_COUNT};
use crate::tree::{
    area_labels, build_tree, evaluate, predict, select, split_train_test, train_forest, ClassCounts, ForestParams,
    Label, PathStep, TreeError, TreeModel, TreeNode, TreeParams, TRAIN_RATIO,
};

pub const FORMAT_VERSION: u64 = 1;
pub const DEFAULT_SEED: u64 = 0;

/// Bundle shipped with the crate, trained on the canonical dataset with
/// [`DEFAULT_SEED`].
pub const CANONICAL_BUNDLE: &str = include_str!("../data/advisor_bundle.json");

#[derive(Debug, Error)]
pub enum AdvisorError {
    #[error("cannot read or write bundle: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt bundle: {0}")]
    Corrupt(String),
    #[error("unsupported bundle format_version {found} (expected {FORMAT_VERSION})")]
    UnsupportedVersion { found: String },
    #[error("bundle must hold exactly {AREA_COUNT} area models, found {0}")]
    AreaCount(usize),
    #[error("unknown area `{0}` in bundle")]
    UnknownArea(String),
    #[error("feature index {0} out of range 0..{FEATURE_COUNT}")]
    BadFeatureIndex(usize),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

pub type Result<T> = std::result::Result<T, AdvisorError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub train_ratio: f64,
}

impl Default for BundleParams {
    fn default() -> Self {
        let t = TreeParams::default();
        BundleParams { max_depth: t.max_depth, min_samples_leaf: t.min_samples_leaf, train_ratio: TRAIN_RATIO }
    }
}

impl BundleParams {
    pub fn tree(&self) -> TreeParams {
        TreeParams { max_depth: self.max_depth, min_samples_leaf: self.min_samples_leaf }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleMetadata {
    pub train_size: usize,
    pub test_size: usize,
    /// Accuracy on the held-out fold.
    pub test_accuracy: BTreeMap<Area, f64>,
    pub train_accuracy: BTreeMap<Area, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdvisorBundle {
    pub format_version: u64,
    pub dataset_version: String,
    pub seed: u64,
    pub params: BundleParams,
    pub metadata: BundleMetadata,
    pub models: BTreeMap<Area, TreeNode>,
}

/// Fits one decision tree per area on the training fold of `seed`'s split.
pub fn train_bundle(m: &FeatureMatrix, params: BundleParams, seed: u64) -> Result<AdvisorBundle> {
    let rows = m.feature_rows();
    let split = split_train_test(rows.len(), params.train_ratio, seed)?;
    let (train_rows, test_rows) = (select(&rows, &split.train), select(&rows, &split.test));
    let mut models = BTreeMap::new();
    let mut test_accuracy = BTreeMap::new();
    let mut train_accuracy = BTreeMap::new();
    for area in Area::ALL {
        let labels = area_labels(m, area);
        let (train_y, test_y) = (select(&labels, &split.train), select(&labels, &split.test));
        let tree = build_tree(&train_rows, &train_y, params.tree())?;
        test_accuracy.insert(area, evaluate(&tree, &test_rows, &test_y)?);
        train_accuracy.insert(area, evaluate(&tree, &train_rows, &train_y)?);
        models.insert(area, tree.root);
    }
    Ok(AdvisorBundle {
        format_version: FORMAT_VERSION,
        dataset_version: m.version().to_string(),
        seed,
        params,
        metadata: BundleMetadata {
            train_size: split.train.len(),
            test_size: split.test.len(),
            test_accuracy,
            train_accuracy,
        },
        models,
    })
}

/// Forest importance per feature for `area`, fit on the same training fold
/// the bundle used.
pub fn area_importance(m: &FeatureMatrix, b: &AdvisorBundle, area: Area) -> Result<Vec<f64>> {
    let rows = m.feature_rows();
    let split = split_train_test(rows.len(), b.params.train_ratio, b.seed)?;
    let labels = area_labels(m, area);
    let params = ForestParams { tree: b.params.tree(), ..ForestParams::default() };
    let forest = train_forest(&select(&rows, &split.train), &select(&labels, &split.train), params, b.seed)?;
    Ok(forest.importance)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AreaVerdict {
    pub area: Area,
    pub verdict: Label,
    pub path: Vec<PathStep>,
    /// Training samples at the leaf reached, as confidence context.
    pub counts: ClassCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuitabilityReport {
    pub features: FeatureVector,
    pub verdicts: Vec<AreaVerdict>,
}

impl SuitabilityReport {
    pub fn verdict(&self, area: Area) -> Label {
        self.verdicts[area.index()].verdict
    }
}

impl fmt::Display for SuitabilityReport {
    /// One line per area: verdict, leaf counts and the tests on the way.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.verdicts {
            let path: Vec<String> = v.path.iter().map(|s| s.to_string()).collect();
            writeln!(
                f,
                "{:<24} {:<13} [{} suitable / {} not] {}",
                v.area.name(),
                v.verdict.to_string(),
                v.counts.suitable,
                v.counts.not_suitable,
                if path.is_empty() { "(root leaf)".to_string() } else { path.join(" > ") }
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WhatIf {
    pub toggled: Feature,
    pub before: SuitabilityReport,
    pub after: SuitabilityReport,
    pub changed_areas: Vec<Area>,
}

impl AdvisorBundle {
    /// The bundle committed with the crate.
    pub fn canonical() -> AdvisorBundle {
        Self::from_json(CANONICAL_BUNDLE).expect("embedded bundle is valid")
    }

    pub fn tree(&self, area: Area) -> TreeModel {
        TreeModel {
            root: self.models[&area].clone(),
            params: self.params.tree(),
            area: Some(area),
            seed: Some(self.seed),
        }
    }

    /// Sorted-key, two-space-indented JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("bundle serialises");
        let mut s = serde_json::to_string_pretty(&sorted(value)).expect("value serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<AdvisorBundle> {
        let value: Value = serde_json::from_str(text).map_err(|e| AdvisorError::Corrupt(e.to_string()))?;
        match value.get("format_version") {
            Some(v) if v.as_u64() == Some(FORMAT_VERSION) => {}
            Some(v) => return Err(AdvisorError::UnsupportedVersion { found: v.to_string() }),
            None => return Err(AdvisorError::Corrupt("missing format_version".into())),
        }
        if let Some(models) = value.get("models").and_then(Value::as_object) {
            if models.len() != AREA_COUNT {
                return Err(AdvisorError::AreaCount(models.len()));
            }
            if let Some(bad) = models.keys().find(|k| Area::from_name(k).is_none()) {
                return Err(AdvisorError::UnknownArea(bad.clone()));
            }
        }
        let b: AdvisorBundle = serde_json::from_value(value).map_err(|e| AdvisorError::Corrupt(e.to_string()))?;
        for root in b.models.values() {
            root.check_paths()?;
        }
        Ok(b)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<AdvisorBundle> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn predict_all(&self, features: &FeatureVector) -> Result<SuitabilityReport> {
        predict_all(self, features)
    }
}

fn sorted(v: Value) -> Value {
    // serde_json's map is ordered by key unless `preserve_order` is enabled;
    // rebuilding keeps that guarantee explicit.
    match v {
        Value::Object(map) => {
            let ordered: BTreeMap<String, Value> = map.into_iter().map(|(k, v)| (k, sorted(v))).collect();
            Value::Object(ordered.into_iter().collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sorted).collect()),
        other => other,
    }
}

pub fn save_bundle(b: &AdvisorBundle, path: impl AsRef<Path>) -> Result<()> {
    b.save(path)
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<AdvisorBundle> {
    AdvisorBundle::load(path)
}

/// Runs all six trees on `features`.
pub fn predict_all(b: &AdvisorBundle, features: &FeatureVector) -> Result<SuitabilityReport> {
    let verdicts = Area::ALL
        .iter()
        .map(|&area| {
            let p = predict(&b.tree(area), features)?;
            Ok(AreaVerdict { area, verdict: p.label, path: p.path, counts: p.counts })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuitabilityReport { features: *features, verdicts })
}

/// Predictions before and after flipping feature `toggle`.
pub fn what_if(b: &AdvisorBundle, features: &FeatureVector, toggle: usize) -> Result<WhatIf> {
    let toggled = Feature::from_index(toggle).ok_or(AdvisorError::BadFeatureIndex(toggle))?;
    let before = predict_all(b, features)?;
    let after = predict_all(b, &features.toggled(toggled))?;
    let changed_areas = Area::ALL.iter().copied().filter(|&a| before.verdict(a) != after.verdict(a)).collect();
    Ok(WhatIf { toggled, before, after, changed_areas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SolutionRecord;

    fn bundle() -> AdvisorBundle {
        train_bundle(&FeatureMatrix::canonical(), BundleParams::default(), DEFAULT_SEED).unwrap()
    }

    #[test]
    fn canonical_bundle_matches_retraining() {
        assert_eq!(bundle().to_json(), CANONICAL_BUNDLE);
    }

    #[test]
    fn training_is_deterministic() {
        assert_eq!(bundle().to_json(), bundle().to_json());
        assert_eq!(bundle().metadata.train_size, 60);
    }

    #[test]
    fn all_zero_area_gives_not_suitable_leaf() {
        let m = FeatureMatrix::canonical();
        let records: Vec<SolutionRecord> = m
            .records()
            .iter()
            .cloned()
            .map(|mut r| {
                r.areas[Area::Healthcare.index()] = false;
                r
            })
            .collect();
        let b = train_bundle(&FeatureMatrix::new(records), BundleParams::default(), 3).unwrap();
        assert!(matches!(b.models[&Area::Healthcare], TreeNode::Leaf { label: Label::NotSuitable, .. }));
    }

    #[test]
    fn leaf_only_bundle_predicts_not_suitable() {
        let mut b = bundle();
        for root in b.models.values_mut() {
            *root = TreeNode::leaf(ClassCounts { not_suitable: 3, suitable: 1 });
        }
        let r = predict_all(&b, &"111111111".parse().unwrap()).unwrap();
        assert!(r.verdicts.iter().all(|v| v.verdict == Label::NotSuitable && v.path.is_empty()));
    }

    #[test]
    fn round_trip_through_file() {
        let b = bundle();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.json");
        save_bundle(&b, &path).unwrap();
        assert_eq!(load_bundle(&path).unwrap(), b);
    }

    #[test]
    fn load_rejections() {
        let json = bundle().to_json();
        assert!(matches!(AdvisorBundle::from_json(&json[..json.len() / 2]), Err(AdvisorError::Corrupt(_))));

        let mut v: Value = serde_json::from_str(&json).unwrap();
        v["format_version"] = 2.into();
        assert!(matches!(AdvisorBundle::from_json(&v.to_string()), Err(AdvisorError::UnsupportedVersion { .. })));

        let mut v: Value = serde_json::from_str(&json).unwrap();
        v["models"].as_object_mut().unwrap().remove("healthcare");
        assert!(matches!(AdvisorBundle::from_json(&v.to_string()), Err(AdvisorError::AreaCount(5))));
    }

    #[test]
    fn what_if_is_an_involution() {
        let b = bundle();
        let x: FeatureVector = "100110010".parse().unwrap();
        let w1 = what_if(&b, &x, 4).unwrap();
        let w2 = what_if(&b, &w1.after.features, 4).unwrap();
        assert_eq!(w2.after, w1.before);
        assert!(matches!(what_if(&b, &x, 9), Err(AdvisorError::BadFeatureIndex(9))));
    }

    #[test]
    fn toggling_an_unused_feature_changes_nothing() {
        let b = bundle();
        let used: Vec<Feature> = b.models.values().flat_map(|r| r.features_used()).collect();
        if let Some(unused) = Feature::ALL.iter().find(|f| !used.contains(f)) {
            for x in FeatureVector::domain().step_by(7) {
                assert!(what_if(&b, &x, unused.index()).unwrap().changed_areas.is_empty());
            }
        }
    }
}
