//! Synthetic data with known ground truth: student cohorts built from planted
//! archetypes, and dashboard navigation logs with planted transition ratios.

mod cohort;
mod usage;

pub use cohort::{
    default_week_zero, generate_cohort, reference_schedule, video_id, Archetype, Cohort, CohortSpec, Intensity,
    Rhythm, Shape, Timing, VIDEOS_PER_WEEK,
};
pub use usage::{generate_usage, DwellSpec, NavigationSpec};
