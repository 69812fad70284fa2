//! File-level orchestration used by the CLI: offline pipeline runs and
//! synthetic dataset generation.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use srl_dash_core::ingest::{ClickEvent, CourseSchedule, GradeBook};
use srl_dash_core::insights::ContentBundle;
use srl_dash_core::pipeline::{run_with, PipelineConfig, PipelineInput, RangeOutput};
use srl_dash_core::synth::{generate_cohort, generate_usage, Cohort, CohortSpec, NavigationSpec};
use srl_dash_core::usage::UsageEvent;
use srl_dash_core::Timestamp;

use crate::config::{CourseConfig, RunConfig};
use crate::error::{Result, ServiceError};
use crate::formats::{self, IngestReport};
use crate::parallel::Rayon;
use crate::store::ContentStore;

#[derive(Debug, Clone)]
pub struct RunFiles {
    pub events: PathBuf,
    pub schedule: PathBuf,
    pub grades: PathBuf,
    pub config: PathBuf,
}

#[derive(Debug, Clone)]
pub struct Inputs {
    pub config: RunConfig,
    pub events: Vec<ClickEvent>,
    pub report: IngestReport,
    pub schedule: CourseSchedule,
    pub grades: GradeBook,
}

pub fn load_inputs(files: &RunFiles) -> Result<Inputs> {
    let config = RunConfig::load(&files.config)?;
    let (events, report) = formats::parse_events(formats::open(&files.events)?, config.pipeline.malformed_tolerance)?;
    let schedule = formats::parse_schedule(
        formats::open(&files.schedule)?,
        config.course.calendar(),
        &files.schedule.display().to_string(),
    )?;
    let grades = formats::parse_grades(formats::open(&files.grades)?, &files.grades.display().to_string())?;
    Ok(Inputs {
        config,
        events,
        report,
        schedule,
        grades,
    })
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub run_id: String,
    pub report: IngestReport,
    pub outputs: Vec<RangeOutput>,
}

impl RunResult {
    pub fn bundles(&self) -> Vec<ContentBundle> {
        self.outputs.iter().flat_map(|o| o.bundles.iter().cloned()).collect()
    }
}

pub fn default_run_id(generated_at: Timestamp) -> String {
    format!("run-{}", generated_at.format("%Y%m%dT%H%M%SZ"))
}

pub fn run_pipeline(inputs: &Inputs, generated_at: Timestamp, run_id: &str) -> Result<RunResult> {
    let input = PipelineInput {
        course_id: &inputs.config.course.id,
        events: &inputs.events,
        schedule: &inputs.schedule,
        grades: &inputs.grades,
        generated_at,
        run_id,
    };
    let outputs = run_with(input, &inputs.config.pipeline, &Rayon)?;
    Ok(RunResult {
        run_id: run_id.to_string(),
        report: inputs.report.clone(),
        outputs,
    })
}

/// Writes `ingest_report.json`, `bundles.json` and per-range
/// `features-<a>-<b>.csv` / `clusters-<a>-<b>.csv` into `dir`.
pub fn write_outputs(dir: &Path, result: &RunResult) -> Result<()> {
    write_json(&dir.join("ingest_report.json"), &result.report)?;
    write_json(&dir.join("bundles.json"), &result.bundles())?;
    for out in &result.outputs {
        let Some(run) = out.bundles.first().map(|b| &b.run) else {
            continue;
        };
        formats::write_features(formats::create(&dir.join(format!("features-{}.csv", out.weeks)))?, &out.features)?;
        formats::write_clusters(formats::create(&dir.join(format!("clusters-{}.csv", out.weeks)))?, out, run)?;
    }
    Ok(())
}

pub fn publish(store_dir: &Path, result: &RunResult) -> Result<u64> {
    ContentStore::open_dir(store_dir)?.publish(&result.bundles())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = formats::create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| ServiceError::io(path, e))
}

pub const SYNTH_COURSE_ID: &str = "synthetic";

/// Files written by [`write_synth`].
pub fn synth_files(dir: &Path) -> RunFiles {
    RunFiles {
        events: dir.join("events.tsv"),
        schedule: dir.join("schedule.csv"),
        grades: dir.join("grades.csv"),
        config: dir.join("config.toml"),
    }
}

/// Generates a cohort and writes it in the ingest formats, with
/// `truth.csv`, a matching `config.toml` and, when `usage_sessions > 0`,
/// `usage.jsonl`.
pub fn write_synth(dir: &Path, spec: &CohortSpec, usage_sessions: usize) -> Result<Cohort> {
    let cohort = generate_cohort(spec)?;
    let files = synth_files(dir);
    let mut w = formats::create(&files.events)?;
    formats::write_events(&mut w, &cohort.events).map_err(|e| ServiceError::io(&files.events, e))?;
    formats::write_schedule(formats::create(&files.schedule)?, &cohort.schedule)?;
    formats::write_grades(formats::create(&files.grades)?, &cohort.grades)?;
    formats::write_truth(formats::create(&dir.join("truth.csv"))?, &cohort.truth)?;
    let config = RunConfig {
        course: CourseConfig {
            id: SYNTH_COURSE_ID.into(),
            week_zero: spec.week_zero,
            weeks: spec.weeks,
        },
        pipeline: PipelineConfig {
            k_profiles: spec.archetypes.len(),
            seed: spec.seed,
            ..PipelineConfig::default()
        },
    };
    std::fs::write(&files.config, config.to_toml()?).map_err(|e| ServiceError::io(&files.config, e))?;
    if usage_sessions > 0 {
        let usage = synth_usage(usage_sessions, spec.seed, spec.week_zero)?;
        crate::usage_log::write_log(&dir.join("usage.jsonl"), &usage)?;
    }
    Ok(cohort)
}

pub fn synth_usage(sessions: usize, seed: u64, start_at: Timestamp) -> Result<Vec<UsageEvent>> {
    Ok(generate_usage(&NavigationSpec::reference(), sessions, seed, start_at)?)
}
