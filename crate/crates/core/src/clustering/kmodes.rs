use std::collections::HashSet;

use serde::Serialize;
use thiserror::Error;

use crate::dataset::SubsetId;

pub const DEFAULT_MAX_ITERATIONS: usize = 100;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClusterError {
    #[error("rows differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no data to cluster")]
    EmptyData,
    #[error("cluster count must be at least 1")]
    ZeroClusters,
    #[error("cannot seed {k} clusters from {distinct} distinct rows")]
    TooManyClusters { k: usize, distinct: usize },
    #[error("partitions differ in length ({0} vs {1})")]
    PartitionLength(usize, usize),
    #[error("partition fixture line {line}: {message}")]
    Fixture { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, ClusterError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KModesConfig {
    pub max_iterations: usize,
}

impl Default for KModesConfig {
    fn default() -> Self {
        KModesConfig { max_iterations: DEFAULT_MAX_ITERATIONS }
    }
}

/// A cluster that lost all its members and was refilled by moving the row
/// farthest from its own mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RepairEvent {
    pub iteration: usize,
    pub cluster: usize,
    pub record: usize,
    pub from_cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterModel {
    pub k: usize,
    pub modes: Vec<Vec<u8>>,
    pub assignment: Vec<usize>,
    pub cost: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Total cost after each (assign, update) iteration.
    pub cost_trace: Vec<usize>,
    pub repairs: Vec<RepairEvent>,
    pub subset: Option<SubsetId>,
}

impl ClusterModel {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    pub fn sorted_sizes(&self) -> Vec<usize> {
        let mut s = self.sizes();
        s.sort_unstable_by(|a, b| b.cmp(a));
        s
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == cluster).collect()
    }
}

/// Simple-matching dissimilarity: the number of positions that differ.
pub fn hamming(a: &[u8], b: &[u8]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(ClusterError::LengthMismatch(a.len(), b.len()));
    }
    Ok(distance(a, b))
}

fn distance(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

fn check_rows(data: &[Vec<u8>]) -> Result<usize> {
    let width = data.first().ok_or(ClusterError::EmptyData)?.len();
    for row in data {
        if row.len() != width {
            return Err(ClusterError::LengthMismatch(width, row.len()));
        }
    }
    Ok(width)
}

/// Cao seeding. The density of a row is the mean over columns of the relative
/// frequency of that row's value; it is kept here as the integer sum of
/// column frequencies (same ordering, exact ties). The first mode is the
/// densest row, each later mode maximises density times the distance to the
/// nearest already-chosen mode. Ties go to the lowest row index.
pub fn cao_init(data: &[Vec<u8>], k: usize) -> Result<Vec<Vec<u8>>> {
    let width = check_rows(data)?;
    if k == 0 {
        return Err(ClusterError::ZeroClusters);
    }
    let distinct = data.iter().collect::<HashSet<_>>().len();
    if k > distinct {
        return Err(ClusterError::TooManyClusters { k, distinct });
    }

    let mut freq = vec![[0usize; 256]; width];
    for row in data {
        for (j, &v) in row.iter().enumerate() {
            freq[j][v as usize] += 1;
        }
    }
    let density: Vec<usize> =
        data.iter().map(|row| row.iter().enumerate().map(|(j, &v)| freq[j][v as usize]).sum()).collect();

    let mut modes: Vec<Vec<u8>> = Vec::with_capacity(k);
    modes.push(data[argmax_first(density.iter().copied())].clone());
    while modes.len() < k {
        let scores = data
            .iter()
            .zip(&density)
            .map(|(row, &dens)| modes.iter().map(|m| dens * distance(row, m)).min().expect("at least one mode"));
        modes.push(data[argmax_first(scores)].clone());
    }
    Ok(modes)
}

fn argmax_first(values: impl Iterator<Item = usize>) -> usize {
    let mut best = (0, None);
    for (i, v) in values.enumerate() {
        if best.1.is_none_or(|b| v > b) {
            best = (i, Some(v));
        }
    }
    best.0
}

/// Nearest mode for every row; ties go to the lowest cluster index.
pub fn assign(data: &[Vec<u8>], modes: &[Vec<u8>]) -> Vec<usize> {
    data.iter()
        .map(|row| {
            let mut best = (0, usize::MAX);
            for (c, m) in modes.iter().enumerate() {
                let d = distance(row, m);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best.0
        })
        .collect()
}

pub fn total_cost(data: &[Vec<u8>], modes: &[Vec<u8>], assignment: &[usize]) -> usize {
    data.iter().zip(assignment).map(|(row, &c)| distance(row, &modes[c])).sum()
}

/// Refills every empty cluster with the row farthest from its current mode,
/// taken from a cluster that keeps at least one member. Ties go to the lowest
/// row index. Returns one event per refilled cluster.
pub fn empty_cluster_repair(
    data: &[Vec<u8>],
    modes: &mut [Vec<u8>],
    assignment: &mut [usize],
    iteration: usize,
) -> Vec<RepairEvent> {
    let k = modes.len();
    let mut sizes = vec![0usize; k];
    for &c in assignment.iter() {
        sizes[c] += 1;
    }
    let mut events = Vec::new();
    for cluster in 0..k {
        if sizes[cluster] > 0 {
            continue;
        }
        let donor = (0..data.len())
            .filter(|&i| sizes[assignment[i]] > 1)
            .map(|i| (i, distance(&data[i], &modes[assignment[i]])))
            .fold(None, |best: Option<(usize, usize)>, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            });
        let Some((record, _)) = donor else {
            break;
        };
        let from_cluster = assignment[record];
        sizes[from_cluster] -= 1;
        sizes[cluster] += 1;
        assignment[record] = cluster;
        modes[cluster] = data[record].clone();
        events.push(RepairEvent { iteration, cluster, record, from_cluster });
    }
    events
}

/// Per-column most frequent value among each cluster's members. On a tie the
/// incumbent value is kept if it is among the tied values, otherwise the
/// smallest tied value wins. Clusters without members keep their mode.
pub fn update_modes(data: &[Vec<u8>], modes: &mut [Vec<u8>], assignment: &[usize]) {
    let width = modes.first().map_or(0, Vec::len);
    for (c, mode) in modes.iter_mut().enumerate() {
        let members: Vec<&Vec<u8>> = data.iter().zip(assignment).filter(|(_, &a)| a == c).map(|(r, _)| r).collect();
        if members.is_empty() {
            continue;
        }
        for j in 0..width {
            let mut counts = [0usize; 256];
            for r in &members {
                counts[r[j] as usize] += 1;
            }
            let top = *counts.iter().max().expect("non-empty");
            if counts[mode[j] as usize] == top {
                continue;
            }
            mode[j] = counts.iter().position(|&n| n == top).expect("max present") as u8;
        }
    }
}

pub fn kmodes_fit(data: &[Vec<u8>], k: usize) -> Result<ClusterModel> {
    kmodes_fit_with(data, k, KModesConfig::default())
}

pub fn kmodes_fit_with(data: &[Vec<u8>], k: usize, config: KModesConfig) -> Result<ClusterModel> {
    let mut modes = cao_init(data, k)?;
    let mut assignment: Option<Vec<usize>> = None;
    let mut cost_trace = Vec::new();
    let mut repairs = Vec::new();
    let mut converged = false;

    for iteration in 1..=config.max_iterations {
        let mut next = assign(data, &modes);
        repairs.extend(empty_cluster_repair(data, &mut modes, &mut next, iteration));
        if assignment.as_ref() == Some(&next) {
            converged = true;
            break;
        }
        update_modes(data, &mut modes, &next);
        cost_trace.push(total_cost(data, &modes, &next));
        assignment = Some(next);
    }

    let assignment = assignment.expect("at least one iteration ran");
    Ok(ClusterModel {
        k,
        cost: total_cost(data, &modes, &assignment),
        iterations: cost_trace.len(),
        converged,
        modes,
        assignment,
        cost_trace,
        repairs,
        subset: None,
    })
}
