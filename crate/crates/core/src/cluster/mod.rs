//! Two-stage clustering: per-dimension spectral clustering over summed DTW
//! distances, then k-modes over each student's tuple of dimension labels.

mod describe;
mod distance;
mod dtw;
mod kmeans;
mod kmodes;
pub mod metrics;
mod profiles;
mod spectral;

pub use describe::{cluster_feature_means, describe_clusters, descriptor_for, DimensionClustering};
pub use distance::{check_series, dimension_distance, pairwise_distances, DistanceMatrix};
pub use dtw::dtw_distance;
pub use kmodes::{hamming, kmodes, kmodes_with, KModesConfig, KModesResult};
pub use profiles::{build_profiles, StudentProfile};
pub use spectral::{spectral_cluster, spectral_cluster_with, SpectralConfig};

/// Relabels so that label ids appear in ascending order of first occurrence.
pub fn canonical_labels(labels: &[usize]) -> alloc::vec::Vec<usize> {
    let mut map = alloc::collections::BTreeMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}
