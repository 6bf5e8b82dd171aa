use std::fmt::Write as _;

use serde::Serialize;

use super::kmodes::{kmodes_fit, ClusterModel, Result};
use crate::dataset::{project, Feature, FeatureMatrix, ProjectedMatrix, SubsetId};

pub const SCAN_CLUSTER_COUNTS: std::ops::RangeInclusive<usize> = 3..=9;
const SELECTED: (usize, SubsetId) = (6, SubsetId::All);

pub fn fit_subset(m: &FeatureMatrix, subset: SubsetId, k: usize) -> Result<ClusterModel> {
    let p = project(m, subset);
    let mut model = kmodes_fit(&p.rows, k)?;
    model.subset = Some(subset);
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScanCell {
    pub k: usize,
    pub subset: SubsetId,
    /// Cluster sizes, largest first.
    pub sizes: Vec<usize>,
    pub cost: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScanReport {
    pub cells: Vec<ScanCell>,
    pub selected_k: usize,
    pub selected_subset: SubsetId,
    pub note: String,
}

impl ScanReport {
    pub fn cell(&self, k: usize, subset: SubsetId) -> Option<&ScanCell> {
        self.cells.iter().find(|c| c.k == k && c.subset == subset)
    }

    /// One block per cluster count: a `n=K,C0,..` header line followed by one
    /// line per feature subset.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for k in SCAN_CLUSTER_COUNTS {
            let _ = write!(out, "n={k}");
            for c in 0..k {
                let _ = write!(out, ",C{c}");
            }
            out.push('\n');
            for subset in SubsetId::ALL {
                if let Some(cell) = self.cell(k, subset) {
                    out.push_str(subset.label());
                    for s in &cell.sizes {
                        let _ = write!(out, ",{s}");
                    }
                    out.push('\n');
                }
            }
        }
        out
    }
}

/// Fits every cluster count in 3..=9 on each of the four feature subsets.
/// The 28 fits are independent; they run on scoped threads and are collected
/// in a fixed order.
pub fn cluster_count_scan(m: &FeatureMatrix) -> Result<ScanReport> {
    let jobs: Vec<(usize, SubsetId)> = SCAN_CLUSTER_COUNTS.flat_map(|k| SubsetId::ALL.map(|s| (k, s))).collect();
    let results: Vec<Result<ClusterModel>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs.iter().map(|&(k, s)| scope.spawn(move || fit_subset(m, s, k))).collect();
        handles.into_iter().map(|h| h.join().expect("scan worker panicked")).collect()
    });
    let mut cells = Vec::with_capacity(jobs.len());
    for ((k, subset), model) in jobs.into_iter().zip(results) {
        let model = model?;
        cells.push(ScanCell { k, subset, sizes: model.sorted_sizes(), cost: model.cost, iterations: model.iterations });
    }

    let largest: Vec<String> = SCAN_CLUSTER_COUNTS
        .filter_map(|k| {
            cells.iter().find(|c| c.k == k && c.subset == SubsetId::All).map(|c| format!("n={k}:{}", c.sizes[0]))
        })
        .collect();
    let note = format!(
        "selected n={} on {} (largest All cluster by n: {})",
        SELECTED.0,
        SELECTED.1.label(),
        largest.join(", ")
    );
    Ok(ScanReport { cells, selected_k: SELECTED.0, selected_subset: SELECTED.1, note })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterProfile {
    pub cluster: usize,
    pub size: usize,
    pub mode: Vec<u8>,
    /// Fraction of members with each active feature set.
    pub support: Vec<(Feature, f64)>,
    /// Features with support >= 0.8 (`+name`) or <= 0.2 (`-name`).
    pub characterization: Vec<String>,
    pub members: Vec<String>,
}

pub fn summarize_clusters(model: &ClusterModel, projected: &ProjectedMatrix, m: &FeatureMatrix) -> Vec<ClusterProfile> {
    (0..model.k)
        .map(|c| {
            let members = model.members(c);
            let size = members.len();
            let support: Vec<(Feature, f64)> = projected
                .columns
                .iter()
                .enumerate()
                .map(|(j, f)| {
                    let ones = members.iter().filter(|&&i| projected.rows[i][j] == 1).count();
                    let frac = if size == 0 { 0.0 } else { ones as f64 / size as f64 };
                    (*f, frac)
                })
                .collect();
            let characterization = support
                .iter()
                .filter_map(|(f, s)| {
                    if *s >= 0.8 {
                        Some(format!("+{f}"))
                    } else if *s <= 0.2 {
                        Some(format!("-{f}"))
                    } else {
                        None
                    }
                })
                .collect();
            ClusterProfile {
                cluster: c,
                size,
                mode: model.modes[c].clone(),
                support,
                characterization,
                members: members.iter().map(|&i| m.records()[i].name.clone()).collect(),
            }
        })
        .collect()
}
