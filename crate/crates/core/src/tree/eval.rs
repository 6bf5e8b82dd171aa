use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::cart::{build_tree, Classifier, Label, Result, TreeError, TreeParams};
use super::forest::{argmax, train_forest, ForestParams};
use super::split::{split_train_test, SplitSpec, TRAIN_RATIO};
use crate::dataset::{Area, Feature, FeatureMatrix, FeatureVector, AREA_COUNT, FEATURE_COUNT};

/// Fraction of rows whose prediction matches the label.
pub fn evaluate<C: Classifier + ?Sized>(model: &C, rows: &[FeatureVector], labels: &[Label]) -> Result<f64> {
    if rows.len() != labels.len() {
        return Err(TreeError::LengthMismatch { rows: rows.len(), labels: labels.len() });
    }
    if rows.is_empty() {
        return Err(TreeError::EmptyEvaluationSet);
    }
    let correct = rows.iter().zip(labels).filter(|(r, l)| model.classify(r) == **l).count();
    Ok(correct as f64 / rows.len() as f64)
}

/// Which fold accuracy is measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// The 25% held-out rows.
    TestFold,
    /// The 75% rows the model was fit on.
    TrainFold,
}

impl EvalMode {
    pub const ALL: [EvalMode; 2] = [EvalMode::TestFold, EvalMode::TrainFold];
}

/// Labelled rows for one area.
pub fn area_labels(m: &FeatureMatrix, area: Area) -> Vec<Label> {
    m.area_column(area).into_iter().map(Label::from_flag).collect()
}

pub fn select<T: Copy>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); 0 for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> MeanStd {
        let n = values.len() as f64;
        if values.is_empty() {
            return MeanStd { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    pub ratio: f64,
    pub tree: TreeParams,
    pub forest: ForestParams,
}

impl ExperimentConfig {
    /// Seeds `0..n` with default parameters.
    pub fn with_seeds(n: u64) -> Self {
        ExperimentConfig {
            seeds: (0..n).collect(),
            ratio: TRAIN_RATIO,
            tree: TreeParams::default(),
            forest: ForestParams::default(),
        }
    }
}

/// Accuracies and forest importance for one (seed, area).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub area: Area,
    pub dt_test: f64,
    pub dt_train: f64,
    pub rf_test: f64,
    pub rf_train: f64,
    pub importance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaSummary {
    pub area: Area,
    pub dt_test: MeanStd,
    pub dt_train: MeanStd,
    pub rf_test: MeanStd,
    pub rf_train: MeanStd,
    /// How often each feature had the largest forest importance.
    pub argmax_counts: Vec<usize>,
    pub mean_importance: Vec<f64>,
}

impl AreaSummary {
    pub fn dt(&self, mode: EvalMode) -> MeanStd {
        match mode {
            EvalMode::TestFold => self.dt_test,
            EvalMode::TrainFold => self.dt_train,
        }
    }

    pub fn rf(&self, mode: EvalMode) -> MeanStd {
        match mode {
            EvalMode::TestFold => self.rf_test,
            EvalMode::TrainFold => self.rf_train,
        }
    }

    /// Share of seeds whose importance argmax was `f`.
    pub fn argmax_share(&self, f: Feature) -> f64 {
        let total: usize = self.argmax_counts.iter().sum();
        self.argmax_counts[f.index()] as f64 / total.max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset_version: String,
    pub config: ExperimentConfig,
    pub areas: Vec<AreaSummary>,
    pub runs: Vec<RunResult>,
}

impl ExperimentReport {
    pub fn area(&self, a: Area) -> &AreaSummary {
        &self.areas[a.index()]
    }

    /// Mean ± sd accuracy per area and mode, plus the most frequent
    /// importance argmax.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} seeds, dataset {}, ratio {}",
            self.config.seeds.len(),
            self.dataset_version,
            self.config.ratio
        );
        let _ = writeln!(
            out,
            "{:<24} {:>15} {:>15} {:>15} {:>15}  top feature (share)",
            "area", "DT test", "RF test", "DT train", "RF train"
        );
        let pct = |m: MeanStd| format!("{:.2}±{:.2}", 100.0 * m.mean, 100.0 * m.std);
        for s in &self.areas {
            let top = argmax(&s.argmax_counts.iter().map(|&c| c as f64).collect::<Vec<_>>())
                .map(|i| Feature::ALL[i])
                .unwrap_or(Feature::DocumentOriented);
            let _ = writeln!(
                out,
                "{:<24} {:>15} {:>15} {:>15} {:>15}  {} ({:.0}%)",
                s.area.name(),
                pct(s.dt_test),
                pct(s.rf_test),
                pct(s.dt_train),
                pct(s.rf_train),
                top,
                100.0 * s.argmax_share(top)
            );
        }
        out
    }
}

fn run_seed(m: &FeatureMatrix, rows: &[FeatureVector], config: &ExperimentConfig, seed: u64) -> Result<Vec<RunResult>> {
    let SplitSpec { train, test } = split_train_test(rows.len(), config.ratio, seed)?;
    let (train_rows, test_rows) = (select(rows, &train), select(rows, &test));
    Area::ALL
        .iter()
        .map(|&area| {
            let labels = area_labels(m, area);
            let (train_y, test_y) = (select(&labels, &train), select(&labels, &test));
            let dt = build_tree(&train_rows, &train_y, config.tree)?;
            let rf = train_forest(&train_rows, &train_y, config.forest, seed)?;
            Ok(RunResult {
                seed,
                area,
                dt_test: evaluate(&dt, &test_rows, &test_y)?,
                dt_train: evaluate(&dt, &train_rows, &train_y)?,
                rf_test: evaluate(&rf, &test_rows, &test_y)?,
                rf_train: evaluate(&rf, &train_rows, &train_y)?,
                importance: rf.importance,
            })
        })
        .collect()
}

/// Repeated seeded 75/25 splits: per seed, a decision tree and a forest are
/// fit on the training fold for every area and scored on both folds. Seeds
/// run on scoped threads; results are gathered in seed order.
pub fn run_experiment(m: &FeatureMatrix, config: &ExperimentConfig) -> Result<ExperimentReport> {
    let rows = m.feature_rows();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(config.seeds.len().max(1));
    let chunk = config.seeds.len().div_ceil(workers).max(1);
    let per_chunk: Vec<Result<Vec<RunResult>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .seeds
            .chunks(chunk)
            .map(|seeds| {
                let rows = &rows;
                scope.spawn(move || {
                    let mut out = Vec::new();
                    for &s in seeds {
                        out.extend(run_seed(m, rows, config, s)?);
                    }
                    Ok(out)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("experiment worker panicked")).collect()
    });
    let mut runs = Vec::with_capacity(config.seeds.len() * AREA_COUNT);
    for r in per_chunk {
        runs.extend(r?);
    }

    let areas = Area::ALL
        .iter()
        .map(|&area| {
            let mine: Vec<&RunResult> = runs.iter().filter(|r| r.area == area).collect();
            let col = |f: fn(&RunResult) -> f64| MeanStd::of(&mine.iter().map(|r| f(r)).collect::<Vec<_>>());
            let mut argmax_counts = vec![0; FEATURE_COUNT];
            let mut mean_importance = vec![0.0; FEATURE_COUNT];
            for r in &mine {
                if r.importance.iter().any(|&v| v > 0.0) {
                    if let Some(i) = argmax(&r.importance) {
                        argmax_counts[i] += 1;
                    }
                }
                for (acc, v) in mean_importance.iter_mut().zip(&r.importance) {
                    *acc += v / mine.len() as f64;
                }
            }
            AreaSummary {
                area,
                dt_test: col(|r| r.dt_test),
                dt_train: col(|r| r.dt_train),
                rf_test: col(|r| r.rf_test),
                rf_train: col(|r| r.rf_train),
                argmax_counts,
                mean_importance,
            }
        })
        .collect();

    Ok(ExperimentReport { dataset_version: m.version().to_string(), config: config.clone(), areas, runs })
}
