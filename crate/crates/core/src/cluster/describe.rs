use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::features::{Dimension, Feature, FeatureMatrixSet};
use crate::{Error, Result, StudentId};

/// Per-dimension student labels plus descriptors for each cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionClustering {
    pub dimension: Dimension,
    pub k: usize,
    pub labels: BTreeMap<StudentId, usize>,
    pub descriptors: BTreeMap<usize, String>,
    /// Mean over members and weeks of every feature of the dimension.
    pub feature_means: BTreeMap<usize, BTreeMap<Feature, f64>>,
}

impl DimensionClustering {
    /// Pairs `labels` (roster order) with students and fills in descriptors
    /// and per-cluster means from `features`.
    pub fn new(
        dimension: Dimension,
        roster: &[StudentId],
        labels: &[usize],
        features: &FeatureMatrixSet,
    ) -> Result<Self> {
        if roster.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: roster.len(),
                found: labels.len(),
            });
        }
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut clustering = DimensionClustering {
            dimension,
            k,
            labels: roster.iter().cloned().zip(labels.iter().copied()).collect(),
            descriptors: BTreeMap::new(),
            feature_means: BTreeMap::new(),
        };
        clustering.validate()?;
        clustering.feature_means = cluster_feature_means(&clustering, features);
        clustering.descriptors = describe_clusters(&clustering, features);
        Ok(clustering)
    }

    pub fn label(&self, student: &str) -> Option<usize> {
        self.labels.get(student).copied()
    }

    pub fn members(&self, label: usize) -> impl Iterator<Item = &str> {
        self.labels
            .iter()
            .filter(move |(_, &l)| l == label)
            .map(|(s, _)| s.as_str())
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.k];
        for &l in self.labels.values() {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn descriptor(&self, label: usize) -> &str {
        self.descriptors.get(&label).map_or("", String::as_str)
    }

    /// Every label in `[0, k)` must be used.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.labels.is_empty() {
            return Err(Error::KOutOfRange { k: self.k, n: self.labels.len() });
        }
        let sizes = self.sizes();
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidParameter(format!(
                "{} cluster {empty} has no members",
                self.dimension
            )));
        }
        Ok(())
    }
}

fn mean_over(features: &FeatureMatrixSet, feature: Feature, members: &[&str]) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for student in members {
        if let Some(values) = features.values(feature, student) {
            sum += values.iter().sum::<f64>();
            n += values.len();
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn cluster_feature_means(
    clustering: &DimensionClustering,
    features: &FeatureMatrixSet,
) -> BTreeMap<usize, BTreeMap<Feature, f64>> {
    (0..clustering.k)
        .map(|label| {
            let members: Vec<&str> = clustering.members(label).collect();
            let means = clustering
                .dimension
                .features()
                .iter()
                .map(|&f| (f, mean_over(features, f, &members)))
                .collect();
            (label, means)
        })
        .collect()
}

/// The quantity a descriptor is based on: the mean of the dimension's
/// features for Regularity, its first feature otherwise.
fn headline(dimension: Dimension, means: &BTreeMap<Feature, f64>) -> f64 {
    match dimension {
        Dimension::Regularity => {
            (means[&Feature::DowPeriodicity] + means[&Feature::HodPeriodicity]) / 2.0
        }
        d => means[&d.features()[0]],
    }
}

/// Templated descriptor per cluster. Proactivity compares against zero
/// delay; the other dimensions compare against the cohort mean.
pub fn describe_clusters(
    clustering: &DimensionClustering,
    features: &FeatureMatrixSet,
) -> BTreeMap<usize, String> {
    let dimension = clustering.dimension;
    let everyone: Vec<&str> = clustering.labels.keys().map(String::as_str).collect();
    let global: BTreeMap<Feature, f64> = dimension
        .features()
        .iter()
        .map(|&f| (f, mean_over(features, f, &everyone)))
        .collect();
    let global = headline(dimension, &global);
    cluster_feature_means(clustering, features)
        .into_iter()
        .map(|(label, means)| {
            let value = headline(dimension, &means);
            (label, String::from(descriptor_for(dimension, value, global)))
        })
        .collect()
}

/// Descriptor for a cluster whose headline value is `value` when the cohort
/// value is `global`.
pub fn descriptor_for(dimension: Dimension, value: f64, global: f64) -> &'static str {
    match dimension {
        Dimension::Proactivity if value <= 0.0 => "up-to-date",
        Dimension::Proactivity => "delayed",
        Dimension::Regularity if value >= global => "high regularity",
        Dimension::Regularity => "low regularity",
        _ if value >= global => "higher intensity",
        _ => "lower intensity",
    }
}
