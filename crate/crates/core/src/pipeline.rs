//! Offline pipeline: sessionize, extract weekly features, cluster every
//! dimension, build profiles and generate the dashboard content, once per
//! requested week range.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::TimeDelta;
use serde::{Deserialize, Serialize};

use crate::cluster::{
    build_profiles, dimension_distance, pairwise_distances, spectral_cluster, DimensionClustering, DistanceMatrix,
    StudentProfile,
};
use crate::features::{extract_features, Dimension, FeatureMatrixSet, FeatureTable, DEFAULT_PROACTIVITY_CAP_DAYS};
use crate::ingest::{roster_of, sessionize, ClickEvent, CourseSchedule, GradeBook, WeekRange, DEFAULT_GAP_MINUTES};
use crate::insights::{build_all_content, ContentBundle, ContentContext, RunMetadata};
use crate::{Error, Result, Timestamp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub gap_threshold_minutes: i64,
    pub k_per_dimension: BTreeMap<Dimension, usize>,
    pub k_profiles: usize,
    pub normalize: bool,
    pub proactivity_cap_days: f64,
    pub seed: u64,
    /// Ranges to precompute; empty means the whole course.
    pub week_ranges: Vec<WeekRange>,
    /// Share of malformed input rows tolerated when parsing.
    pub malformed_tolerance: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            gap_threshold_minutes: DEFAULT_GAP_MINUTES,
            k_per_dimension: Dimension::ALL.iter().map(|&d| (d, 2)).collect(),
            k_profiles: 5,
            normalize: true,
            proactivity_cap_days: DEFAULT_PROACTIVITY_CAP_DAYS,
            seed: 42,
            week_ranges: Vec::new(),
            malformed_tolerance: 0.01,
        }
    }
}

impl PipelineConfig {
    pub fn k(&self, dimension: Dimension) -> usize {
        self.k_per_dimension.get(&dimension).copied().unwrap_or(2)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParameter(msg));
        if self.gap_threshold_minutes <= 0 {
            return fail(format!("gap_threshold_minutes must be positive, got {}", self.gap_threshold_minutes));
        }
        if let Some((d, _)) = self.k_per_dimension.iter().find(|(_, &k)| k == 0) {
            return fail(format!("k for {d} must be at least 1"));
        }
        if self.k_profiles == 0 {
            return fail("k_profiles must be at least 1".into());
        }
        if !self.proactivity_cap_days.is_finite() || self.proactivity_cap_days <= 0.0 {
            return fail("proactivity_cap_days must be positive".into());
        }
        if !(0.0..1.0).contains(&self.malformed_tolerance) {
            return fail("malformed_tolerance must be in [0, 1)".into());
        }
        Ok(())
    }

    /// Configured ranges, or `[1, weeks]` when none are set.
    pub fn ranges(&self, weeks: u32) -> Result<Vec<WeekRange>> {
        if self.week_ranges.is_empty() {
            return Ok(alloc::vec![WeekRange::new(1, weeks)?]);
        }
        for r in &self.week_ranges {
            if r.is_empty() || r.from == 0 || r.to > weeks {
                return Err(Error::InvalidParameter(format!("week range {r} outside 1-{weeks}")));
            }
        }
        Ok(self.week_ranges.clone())
    }
}

/// Computes a full DTW distance matrix for one feature. The std companion
/// supplies a parallel implementation.
pub trait PairwiseDtw {
    fn pairwise(&self, series: &FeatureTable) -> Result<DistanceMatrix>;
}

/// Single-threaded DTW over all pairs.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl PairwiseDtw for Sequential {
    fn pairwise(&self, series: &FeatureTable) -> Result<DistanceMatrix> {
        pairwise_distances(series)
    }
}

/// DTW per feature, summed per dimension, then spectral clustering.
pub fn cluster_dimension(
    features: &FeatureMatrixSet,
    dimension: Dimension,
    k: usize,
    normalize: bool,
    seed: u64,
    dtw: &dyn PairwiseDtw,
) -> Result<DimensionClustering> {
    let matrices = dimension
        .features()
        .iter()
        .map(|&f| dtw.pairwise(&features.table(f)))
        .collect::<Result<Vec<_>>>()?;
    let combined = dimension_distance(&matrices, normalize)?;
    let k = k.min(combined.n());
    let labels = spectral_cluster(&combined, k, seed)?;
    DimensionClustering::new(dimension, combined.roster(), &labels, features)
}

/// Inputs of one run. Events must be sorted by student then time.
#[derive(Debug, Clone, Copy)]
pub struct PipelineInput<'a> {
    pub course_id: &'a str,
    pub events: &'a [ClickEvent],
    pub schedule: &'a CourseSchedule,
    pub grades: &'a GradeBook,
    pub generated_at: Timestamp,
    pub run_id: &'a str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeOutput {
    pub weeks: WeekRange,
    pub features: FeatureMatrixSet,
    pub clusterings: BTreeMap<Dimension, DimensionClustering>,
    pub profiles: Vec<StudentProfile>,
    pub bundles: Vec<ContentBundle>,
}

impl RangeOutput {
    /// Profile index per student, in roster order.
    pub fn profile_labels(&self) -> Vec<usize> {
        let mut by_student = BTreeMap::new();
        for p in &self.profiles {
            for s in &p.members {
                by_student.insert(s.as_str(), p.profile_id);
            }
        }
        self.features.roster.iter().map(|s| by_student[s.as_str()]).collect()
    }
}

pub fn run(input: PipelineInput<'_>, config: &PipelineConfig) -> Result<Vec<RangeOutput>> {
    run_with(input, config, &Sequential)
}

pub fn run_with(input: PipelineInput<'_>, config: &PipelineConfig, dtw: &dyn PairwiseDtw) -> Result<Vec<RangeOutput>> {
    config.validate()?;
    let roster = roster_of(input.events);
    if roster.is_empty() {
        return Err(Error::RosterMismatch("event log has no students".into()));
    }
    let sessions = sessionize(input.events, TimeDelta::minutes(config.gap_threshold_minutes));
    let metadata = RunMetadata {
        run_id: input.run_id.into(),
        seed: config.seed,
        roster_size: roster.len(),
        k_per_dimension: Dimension::ALL.iter().map(|&d| (d, config.k(d))).collect(),
        k_profiles: config.k_profiles,
        normalize: config.normalize,
        gap_threshold_minutes: config.gap_threshold_minutes,
        proactivity_cap_days: config.proactivity_cap_days,
        software_version: env!("CARGO_PKG_VERSION").into(),
    };
    let ctx = ContentContext {
        course_id: input.course_id.into(),
        generated_at: input.generated_at,
        run: metadata,
    };
    let mut outputs = Vec::new();
    for weeks in config.ranges(input.schedule.calendar.weeks)? {
        let features = extract_features(
            input.events,
            &sessions,
            input.schedule,
            &roster,
            weeks,
            config.proactivity_cap_days,
        )?;
        let mut clusterings = BTreeMap::new();
        for d in Dimension::ALL {
            let c = cluster_dimension(&features, d, config.k(d), config.normalize, config.seed, dtw)?;
            clusterings.insert(d, c);
        }
        let profiles = build_profiles(&clusterings, input.grades, config.k_profiles, config.seed)?;
        let bundles = build_all_content(&ctx, &features, &clusterings, &profiles)?;
        outputs.push(RangeOutput {
            weeks,
            features,
            clusterings,
            profiles,
            bundles,
        });
    }
    Ok(outputs)
}
