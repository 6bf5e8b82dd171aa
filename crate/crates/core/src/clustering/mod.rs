//! Categorical clustering of the feature rows: k-modes with Cao seeding,
//! the cluster-count scan over feature subsets, and partition agreement.

mod kmodes;
mod partition;
mod scan;

pub use kmodes::{
    assign, cao_init, empty_cluster_repair, hamming, kmodes_fit, kmodes_fit_with, total_cost, update_modes,
    ClusterError, ClusterModel, KModesConfig, RepairEvent, DEFAULT_MAX_ITERATIONS,
};
pub use partition::{compare_partitions, Partition, PartitionAgreement, CLUSTER_COMPOSITION};
pub use scan::{
    cluster_count_scan, fit_subset, summarize_clusters, ClusterProfile, ScanCell, ScanReport, SCAN_CLUSTER_COUNTS,
};
