use std::collections::HashMap;

use serde::Serialize;

use super::kmodes::{ClusterError, Result};
use crate::dataset::FeatureMatrix;

/// Published six-class composition, `solution_name,class_id`.
pub const CLUSTER_COMPOSITION: &str = include_str!("../../data/cluster_composition.csv");

/// Group labels per record index. Group ids are arbitrary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionAgreement {
    pub rand_index: f64,
    pub adjusted_rand_index: f64,
}

impl Partition {
    pub fn new(labels: Vec<usize>) -> Self {
        Partition { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Reads a `solution_name,class_id` fixture and orders it like `m`.
    /// Every record must appear exactly once.
    pub fn from_fixture(text: &str, m: &FeatureMatrix) -> Result<Partition> {
        let mut by_name: HashMap<&str, usize> = HashMap::new();
        let mut class_ids: HashMap<&str, usize> = HashMap::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let (name, class) = line.rsplit_once(',').ok_or_else(|| ClusterError::Fixture {
                line: i + 1,
                message: "expected solution_name,class_id".into(),
            })?;
            let next = class_ids.len();
            let id = *class_ids.entry(class.trim()).or_insert(next);
            if by_name.insert(name, id).is_some() {
                return Err(ClusterError::Fixture { line: i + 1, message: format!("`{name}` listed twice") });
            }
        }
        let labels = m
            .records()
            .iter()
            .map(|r| {
                by_name.get(r.name.as_str()).copied().ok_or_else(|| ClusterError::Fixture {
                    line: 0,
                    message: format!("`{}` missing from fixture", r.name),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if by_name.len() != labels.len() {
            return Err(ClusterError::Fixture {
                line: 0,
                message: format!("fixture lists {} names, dataset has {}", by_name.len(), labels.len()),
            });
        }
        Ok(Partition { labels })
    }

    pub fn published(m: &FeatureMatrix) -> Result<Partition> {
        Self::from_fixture(CLUSTER_COMPOSITION, m)
    }
}

fn pairs(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Pair-counting Rand index and its chance-adjusted form. When both
/// partitions are trivial in the same way (adjusted denominator zero) the
/// adjusted index is defined as 1.
pub fn compare_partitions(p: &Partition, q: &Partition) -> Result<PartitionAgreement> {
    if p.len() != q.len() {
        return Err(ClusterError::PartitionLength(p.len(), q.len()));
    }
    let n = p.len() as u64;
    let mut joint: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&a, &b) in p.labels.iter().zip(&q.labels) {
        *joint.entry((a, b)).or_default() += 1;
        *rows.entry(a).or_default() += 1;
        *cols.entry(b).or_default() += 1;
    }
    let total = pairs(n);
    if total == 0.0 {
        return Ok(PartitionAgreement { rand_index: 1.0, adjusted_rand_index: 1.0 });
    }
    let index: f64 = joint.values().map(|&c| pairs(c)).sum();
    let row_sum: f64 = rows.values().map(|&c| pairs(c)).sum();
    let col_sum: f64 = cols.values().map(|&c| pairs(c)).sum();

    let rand_index = (total + 2.0 * index - row_sum - col_sum) / total;
    let expected = row_sum * col_sum / total;
    let max_index = (row_sum + col_sum) / 2.0;
    let adjusted_rand_index = if max_index == expected { 1.0 } else { (index - expected) / (max_index - expected) };
    Ok(PartitionAgreement { rand_index, adjusted_rand_index })
}
