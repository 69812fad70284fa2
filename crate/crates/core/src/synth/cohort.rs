//! Synthetic cohorts with planted archetypes, realized as raw click events
//! so that the whole ingest and feature path is exercised.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use chrono::{TimeDelta, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ingest::{Calendar, ClickEvent, CourseSchedule, EventType, GradeBook};
use crate::{Error, Result, StudentId, Timestamp};

pub const VIDEOS_PER_WEEK: u32 = 3;
const SESSIONS_PER_WEEK: usize = 6;
/// Relative jitter per unit of noise.
const JITTER: f64 = 0.1;
const GAP_MINUTES: i64 = 45;
const PING_MINUTES: i64 = 15;
const REGULAR_START_HOUR: u32 = 9;
const IRREGULAR_HOURS: [u32; 6] = [7, 10, 13, 16, 19, 21];
/// Ramp amplitude of an increasing-intensity student (0.4x to 1.6x).
const RAMP: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intensity {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Constant,
    Increasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rhythm {
    Regular,
    Irregular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Timing {
    UpToDate,
    Delayed,
}

/// Generator parameters for one planted group of students.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archetype {
    pub name: String,
    /// Weekly time online: 2 h (low) or 5 h (high), with video clicks to match.
    pub effort: Intensity,
    /// Constant weekly volume, or a ramp from 0.4x to 1.6x.
    pub consistency: Shape,
    /// Two consecutive days at a fixed hour, or six days at spread hours.
    pub regularity: Rhythm,
    /// First plays two days before the session, or three days after.
    pub proactivity: Timing,
    /// High: 4 pauses per hour and 4 speed changes a week. Low: 1 and 0.
    pub control: Intensity,
    pub weight: f64,
    pub grade_mean: f64,
    pub grade_sd: f64,
}

impl Archetype {
    #[allow(clippy::too_many_arguments)]
    fn new(
        name: &str,
        effort: Intensity,
        consistency: Shape,
        regularity: Rhythm,
        proactivity: Timing,
        control: Intensity,
        grade_mean: f64,
    ) -> Self {
        Archetype {
            name: name.into(),
            effort,
            consistency,
            regularity,
            proactivity,
            control,
            weight: 0.0,
            grade_mean,
            grade_sd: 0.4,
        }
    }

    /// The five reference archetypes, best grade first.
    pub fn reference() -> Vec<Archetype> {
        use Intensity::{High, Low};
        use Rhythm::{Irregular, Regular};
        use Shape::{Constant, Increasing};
        use Timing::{Delayed, UpToDate};
        vec![
            Archetype::new("steady planner", Low, Constant, Regular, UpToDate, High, 5.3),
            Archetype::new("late steady", Low, Constant, Regular, Delayed, High, 3.4),
            Archetype::new("intense scattered", High, Increasing, Irregular, UpToDate, Low, 4.5),
            Archetype::new("intense late", High, Increasing, Regular, Delayed, Low, 4.0),
            Archetype::new("light scattered", Low, Constant, Irregular, UpToDate, Low, 4.2),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub students: usize,
    pub weeks: u32,
    pub archetypes: Vec<Archetype>,
    /// Multiplier on the default jitter; 0 generates exact archetype values.
    pub noise: f64,
    pub seed: u64,
    /// Monday 00:00 UTC before week 1.
    pub week_zero: Timestamp,
}

pub fn default_week_zero() -> Timestamp {
    Utc.with_ymd_and_hms(2023, 2, 20, 0, 0, 0).unwrap()
}

impl CohortSpec {
    /// The first `profiles` reference archetypes with equal weights.
    pub fn reference(students: usize, weeks: u32, profiles: usize, seed: u64) -> Result<Self> {
        let mut archetypes = Archetype::reference();
        if profiles == 0 || profiles > archetypes.len() {
            return Err(Error::InvalidSpec(format!(
                "profiles must be in 1..={}, got {profiles}",
                archetypes.len()
            )));
        }
        archetypes.truncate(profiles);
        for a in &mut archetypes {
            a.weight = 1.0 / profiles as f64;
        }
        let spec = CohortSpec {
            students,
            weeks,
            archetypes,
            noise: 1.0,
            seed,
            week_zero: default_week_zero(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidSpec(msg));
        if self.archetypes.is_empty() {
            return fail("no archetypes".into());
        }
        if self.students < self.archetypes.len() {
            return fail(format!(
                "{} students cannot cover {} archetypes",
                self.students,
                self.archetypes.len()
            ));
        }
        if self.weeks == 0 {
            return fail("weeks must be at least 1".into());
        }
        let negative = |x: f64| x.is_nan() || x < 0.0;
        if self.archetypes.iter().any(|a| negative(a.weight) || negative(a.grade_sd)) {
            return fail("weights and grade sds must be non-negative".into());
        }
        let total: f64 = self.archetypes.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return fail(format!("mixing weights sum to {total}"));
        }
        if !(0.0..=5.0).contains(&self.noise) {
            return fail(format!("noise {} outside [0, 5]", self.noise));
        }
        Ok(())
    }

    /// Students per archetype by largest remainder.
    pub fn counts(&self) -> Vec<usize> {
        let quotas: Vec<f64> = self.archetypes.iter().map(|a| a.weight * self.students as f64).collect();
        let mut counts: Vec<usize> = quotas.iter().map(|q| libm::floor(*q) as usize).collect();
        let mut order: Vec<usize> = (0..quotas.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = quotas[a] - counts[a] as f64;
            let rb = quotas[b] - counts[b] as f64;
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        let missing = self.students - counts.iter().sum::<usize>();
        for &i in order.iter().take(missing) {
            counts[i] += 1;
        }
        counts
    }
}

/// Generated cohort plus its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub events: Vec<ClickEvent>,
    pub schedule: CourseSchedule,
    pub grades: GradeBook,
    /// Student to archetype index.
    pub truth: BTreeMap<StudentId, usize>,
}

pub fn video_id(week: u32, j: u32) -> String {
    format!("w{week}v{j}")
}

/// Three videos per week, each discussed on Wednesday 10:00.
pub fn reference_schedule(calendar: Calendar) -> Result<CourseSchedule> {
    let rows = (1..=calendar.weeks).flat_map(|w| {
        let start = calendar.week_start(w) + TimeDelta::days(2) + TimeDelta::hours(10);
        (1..=VIDEOS_PER_WEEK).map(move |j| (video_id(w, j), i64::from(w), start))
    });
    CourseSchedule::new(calendar, rows)
}

struct Generator<'a> {
    spec: &'a CohortSpec,
    calendar: Calendar,
    rng: ChaCha8Rng,
}

struct PlannedSession {
    start: Timestamp,
    end: Timestamp,
}

impl Generator<'_> {
    fn jitter(&mut self) -> f64 {
        if self.spec.noise == 0.0 {
            return 1.0;
        }
        1.0 + self.spec.noise * JITTER * self.rng.random_range(-1.0..=1.0)
    }

    fn shape(&self, arch: &Archetype, slot: u32) -> f64 {
        match arch.consistency {
            Shape::Constant => 1.0,
            Shape::Increasing if self.spec.weeks == 1 => 1.0,
            Shape::Increasing => {
                1.0 - RAMP + 2.0 * RAMP * f64::from(slot) / f64::from(self.spec.weeks - 1)
            }
        }
    }

    fn plan_sessions(&mut self, arch: &Archetype, week: u32, hours: f64) -> Vec<PlannedSession> {
        let monday = self.calendar.week_start(week);
        let mut minutes: Vec<i64> = (0..SESSIONS_PER_WEEK)
            .map(|_| {
                let m = hours * 60.0 / SESSIONS_PER_WEEK as f64;
                libm::round(m * self.jitter()).max(5.0) as i64
            })
            .collect();
        minutes.reverse();
        let mut plan = Vec::with_capacity(SESSIONS_PER_WEEK);
        match arch.regularity {
            Rhythm::Regular => {
                let first_day = match arch.proactivity {
                    Timing::UpToDate => 0,
                    Timing::Delayed => 4,
                };
                for day in first_day..first_day + 2 {
                    let offset = if self.spec.noise == 0.0 { 0 } else { self.rng.random_range(0..=10) };
                    let mut start = monday
                        + TimeDelta::days(day)
                        + TimeDelta::hours(i64::from(REGULAR_START_HOUR))
                        + TimeDelta::minutes(offset);
                    for _ in 0..SESSIONS_PER_WEEK / 2 {
                        let end = start + TimeDelta::minutes(minutes.pop().unwrap());
                        plan.push(PlannedSession { start, end });
                        let gap = libm::round(GAP_MINUTES as f64 * self.jitter()).max(35.0) as i64;
                        start = end + TimeDelta::minutes(gap);
                    }
                }
            }
            Rhythm::Irregular => {
                let mut hours_of_day = IRREGULAR_HOURS;
                hours_of_day.shuffle(&mut self.rng);
                for (day, hour) in hours_of_day.iter().enumerate() {
                    let offset = if self.spec.noise == 0.0 { 0 } else { self.rng.random_range(0..=10) };
                    let start = monday
                        + TimeDelta::days(day as i64)
                        + TimeDelta::hours(i64::from(*hour))
                        + TimeDelta::minutes(offset);
                    let end = start + TimeDelta::minutes(minutes.pop().unwrap());
                    plan.push(PlannedSession { start, end });
                }
            }
        }
        plan
    }

    fn student_week(&mut self, student: &str, arch: &Archetype, week: u32, out: &mut Vec<ClickEvent>) {
        let slot = week - 1;
        let factor = self.shape(arch, slot);
        let (base_hours, base_clicks) = match arch.effort {
            Intensity::Low => (2.0, 24.0),
            Intensity::High => (5.0, 60.0),
        };
        let hours = base_hours * factor * self.jitter();
        let plan = self.plan_sessions(arch, week, hours);
        let online_hours: f64 = plan.iter().map(|s| (s.end - s.start).num_seconds() as f64 / 3600.0).sum();
        let (pause_rate, speed_changes) = match arch.control {
            Intensity::High => (4.0, 4.0),
            Intensity::Low => (1.0, 0.0),
        };
        let pauses = libm::round(pause_rate * online_hours * self.jitter()) as usize;
        let speed = libm::round(speed_changes * self.jitter()) as usize;
        let first_plays = VIDEOS_PER_WEEK as usize;
        let clicks = (libm::round(base_clicks * factor * self.jitter()) as usize)
            .max(first_plays + pauses + speed + SESSIONS_PER_WEEK);

        // First plays go into the designated session: the first one of the
        // week when up to date, the first one on Saturday otherwise.
        let designated_from = match arch.proactivity {
            Timing::UpToDate => self.calendar.week_start(week),
            Timing::Delayed => self.calendar.week_start(week) + TimeDelta::days(5),
        };
        let designated = plan
            .iter()
            .position(|s| s.start >= designated_from)
            .unwrap_or(plan.len() - 1);

        for (i, s) in plan.iter().enumerate() {
            out.push(ClickEvent::new(student, s.start, EventType::PageView));
            let mut t = s.start + TimeDelta::minutes(PING_MINUTES);
            while t < s.end {
                out.push(ClickEvent::new(student, t, EventType::SessionPing));
                t += TimeDelta::minutes(PING_MINUTES);
            }
            out.push(ClickEvent::new(student, s.end, EventType::SessionPing));
            if i == designated {
                for j in 1..=VIDEOS_PER_WEEK {
                    let at = s.start + TimeDelta::seconds(20 * i64::from(j));
                    out.push(ClickEvent::new(student, at, EventType::VideoPlay).with_object(video_id(week, j)));
                }
            }
        }

        // Remaining video events are spread over the sessions in proportion
        // to their length.
        let mut kinds = Vec::with_capacity(clicks - first_plays);
        kinds.extend(core::iter::repeat_n(EventType::VideoPause, pauses));
        kinds.extend(core::iter::repeat_n(EventType::VideoSpeedChange, speed));
        let rest = clicks - first_plays - pauses - speed;
        kinds.extend((0..rest).map(|i| if i % 2 == 0 { EventType::VideoPlay } else { EventType::VideoSeek }));
        kinds.shuffle(&mut self.rng);
        let spans: Vec<i64> = plan.iter().map(|s| (s.end - s.start).num_seconds() - 120).collect();
        let total: i64 = spans.iter().map(|s| s.max(&1)).sum();
        let n = kinds.len() as i64;
        for (i, kind) in kinds.into_iter().enumerate() {
            let mut pos = ((2 * i as i64 + 1) * total) / (2 * n);
            let mut k = 0;
            while k + 1 < plan.len() && pos >= spans[k].max(1) {
                pos -= spans[k].max(1);
                k += 1;
            }
            let at = plan[k].start + TimeDelta::seconds(90 + pos.min(spans[k].max(1) - 1));
            // before the designated session only earlier material is replayed
            let video = if k >= designated {
                video_id(week, 1 + (i as u32 % VIDEOS_PER_WEEK))
            } else {
                video_id(week - 1, 1 + (i as u32 % VIDEOS_PER_WEEK))
            };
            let mut event = ClickEvent::new(student, at, kind).with_object(video);
            if kind == EventType::VideoSpeedChange {
                event = event.with_value(1.5);
            }
            out.push(event);
        }
    }
}

/// Deterministic in `spec.seed`.
pub fn generate_cohort(spec: &CohortSpec) -> Result<Cohort> {
    spec.validate()?;
    let calendar = Calendar {
        week_zero: spec.week_zero,
        weeks: spec.weeks,
    };
    let schedule = reference_schedule(calendar)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut labels: Vec<usize> = spec
        .counts()
        .iter()
        .enumerate()
        .flat_map(|(a, &n)| core::iter::repeat_n(a, n))
        .collect();
    labels.shuffle(&mut rng);

    let mut gen = Generator {
        spec,
        calendar,
        rng,
    };
    let width = format!("{}", spec.students).len().max(3);
    let mut events = Vec::new();
    let mut grades = GradeBook::new();
    let mut truth = BTreeMap::new();
    for (i, &a) in labels.iter().enumerate() {
        let student = format!("s{:0width$}", i + 1);
        let arch = &spec.archetypes[a];
        for week in 1..=spec.weeks {
            gen.student_week(&student, arch, week, &mut events);
        }
        let grade = if spec.noise == 0.0 || arch.grade_sd == 0.0 {
            arch.grade_mean
        } else {
            let normal = Normal::new(arch.grade_mean, arch.grade_sd * spec.noise)
                .map_err(|e| Error::InvalidSpec(format!("{e}")))?;
            normal.sample(&mut gen.rng)
        };
        let grade = libm::round(grade.clamp(1.0, 6.0) * 100.0) / 100.0;
        grades.insert(student.clone(), grade)?;
        truth.insert(student, a);
    }
    crate::ingest::sort_events(&mut events);
    Ok(Cohort {
        events,
        schedule,
        grades,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::roster_of;

    #[test]
    fn reference_counts_follow_weights() {
        let spec = CohortSpec::reference(292, 10, 5, 42).unwrap();
        assert_eq!(spec.counts(), [59, 59, 58, 58, 58]);
        let cohort = generate_cohort(&spec).unwrap();
        let mut per = [0usize; 5];
        for a in cohort.truth.values() {
            per[*a] += 1;
        }
        assert_eq!(per, [59, 59, 58, 58, 58]);
        assert_eq!(roster_of(&cohort.events).len(), 292);
        assert_eq!(cohort.grades.len(), 292);
        assert_eq!(cohort.schedule.len(), 30);
        assert!(cohort.events.iter().all(|e| e.validate().is_ok()));
    }

    #[test]
    fn deterministic_in_seed() {
        let spec = CohortSpec::reference(12, 3, 3, 9).unwrap();
        assert_eq!(generate_cohort(&spec).unwrap(), generate_cohort(&spec).unwrap());
        let other = CohortSpec { seed: 10, ..spec.clone() };
        assert_ne!(generate_cohort(&spec).unwrap().events, generate_cohort(&other).unwrap().events);
    }

    #[test]
    fn single_student() {
        let spec = CohortSpec::reference(1, 1, 1, 0).unwrap();
        let cohort = generate_cohort(&spec).unwrap();
        assert_eq!(cohort.truth.len(), 1);
        assert_eq!(cohort.truth.values().next(), Some(&0));
    }

    #[test]
    fn noiseless_grades_are_exact() {
        let mut spec = CohortSpec::reference(10, 2, 5, 1).unwrap();
        spec.noise = 0.0;
        let cohort = generate_cohort(&spec).unwrap();
        for (s, a) in &cohort.truth {
            assert_eq!(cohort.grades.get(s), Some(spec.archetypes[*a].grade_mean));
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(CohortSpec::reference(292, 10, 6, 42), Err(Error::InvalidSpec(_))));
        assert!(CohortSpec::reference(292, 10, 0, 42).is_err());
        assert!(CohortSpec::reference(3, 10, 5, 42).is_err());
        assert!(CohortSpec::reference(10, 0, 5, 42).is_err());
        let mut spec = CohortSpec::reference(10, 2, 2, 1).unwrap();
        spec.archetypes[0].weight = 0.9;
        assert!(generate_cohort(&spec).is_err());
    }
}
