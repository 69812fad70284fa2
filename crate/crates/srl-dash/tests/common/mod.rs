#![allow(dead_code)]

use chrono::{TimeZone, Utc};

use srl_dash::run::{run_pipeline, Inputs};
use srl_dash::config::{CourseConfig, RunConfig};
use srl_dash_core::ingest::WeekRange;
use srl_dash_core::insights::ContentBundle;
use srl_dash_core::pipeline::PipelineConfig;
use srl_dash_core::synth::{generate_cohort, CohortSpec};
use srl_dash_core::Timestamp;

pub fn generated_at() -> Timestamp {
    Utc.with_ymd_and_hms(2024, 6, 1, 12, 0, 0).unwrap()
}

/// A small synthetic course run through the whole pipeline, for two ranges.
pub fn small_inputs(course_id: &str) -> Inputs {
    let spec = CohortSpec::reference(30, 3, 5, 5).unwrap();
    let cohort = generate_cohort(&spec).unwrap();
    Inputs {
        config: RunConfig {
            course: CourseConfig {
                id: course_id.into(),
                week_zero: spec.week_zero,
                weeks: spec.weeks,
            },
            pipeline: PipelineConfig {
                week_ranges: vec![WeekRange::new(1, 3).unwrap(), WeekRange::new(2, 3).unwrap()],
                ..PipelineConfig::default()
            },
        },
        events: cohort.events,
        report: Default::default(),
        schedule: cohort.schedule,
        grades: cohort.grades,
    }
}

pub fn bundles(course_id: &str, run_id: &str) -> Vec<ContentBundle> {
    run_pipeline(&small_inputs(course_id), generated_at(), run_id).unwrap().bundles()
}

/// Copy of `bundles` stamped with a different run id.
pub fn restamp(bundles: &[ContentBundle], run_id: &str) -> Vec<ContentBundle> {
    bundles
        .iter()
        .cloned()
        .map(|mut b| {
            b.run.run_id = run_id.into();
            b
        })
        .collect()
}

pub fn full_range() -> WeekRange {
    WeekRange::new(1, 3).unwrap()
}

/// `bundles("c1", "run-1")`, computed once per test binary.
pub fn shared() -> &'static [ContentBundle] {
    static CELL: std::sync::OnceLock<Vec<ContentBundle>> = std::sync::OnceLock::new();
    CELL.get_or_init(|| bundles("c1", "run-1"))
}
