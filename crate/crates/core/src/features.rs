//! Weekly feature time series for the five SRL dimensions.
//!
//! Every feature is a vector indexed by the weeks of a [`WeekRange`]. Weeks
//! without activity are 0; Proactivity uses a censoring cap for videos that
//! were never played.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use chrono::{Datelike, Timelike};
use serde::{Deserialize, Serialize};

use crate::ingest::{Calendar, ClickEvent, CourseSchedule, EventType, Session, WeekRange};
use crate::{Error, Result, StudentId, Timestamp};

pub const DEFAULT_PROACTIVITY_CAP_DAYS: f64 = 14.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Effort,
    Consistency,
    Regularity,
    Proactivity,
    Control,
}

impl Dimension {
    /// Canonical order; profile modes are tuples in this order.
    pub const ALL: [Dimension; 5] = [
        Dimension::Effort,
        Dimension::Consistency,
        Dimension::Regularity,
        Dimension::Proactivity,
        Dimension::Control,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Effort => "effort",
            Dimension::Consistency => "consistency",
            Dimension::Regularity => "regularity",
            Dimension::Proactivity => "proactivity",
            Dimension::Control => "control",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Dimension::Effort => "Effort",
            Dimension::Consistency => "Consistency",
            Dimension::Regularity => "Regularity",
            Dimension::Proactivity => "Proactivity",
            Dimension::Control => "Control",
        }
    }

    pub fn features(self) -> &'static [Feature] {
        match self {
            Dimension::Effort => &[Feature::TimeOnlineHours, Feature::VideoClicks],
            Dimension::Consistency => &[Feature::MeanSessionMinutes, Feature::RelativeTimeOnline],
            Dimension::Regularity => &[Feature::DowPeriodicity, Feature::HodPeriodicity],
            Dimension::Proactivity => &[Feature::MeanDelayDays],
            Dimension::Control => &[Feature::PauseRate, Feature::SpeedChanges],
        }
    }

    pub fn index(self) -> usize {
        Dimension::ALL.iter().position(|d| *d == self).unwrap_or(0)
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown dimension {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    TimeOnlineHours,
    VideoClicks,
    MeanSessionMinutes,
    RelativeTimeOnline,
    DowPeriodicity,
    HodPeriodicity,
    MeanDelayDays,
    PauseRate,
    SpeedChanges,
}

impl Feature {
    pub const ALL: [Feature; 9] = [
        Feature::TimeOnlineHours,
        Feature::VideoClicks,
        Feature::MeanSessionMinutes,
        Feature::RelativeTimeOnline,
        Feature::DowPeriodicity,
        Feature::HodPeriodicity,
        Feature::MeanDelayDays,
        Feature::PauseRate,
        Feature::SpeedChanges,
    ];

    pub fn dimension(self) -> Dimension {
        match self {
            Feature::TimeOnlineHours | Feature::VideoClicks => Dimension::Effort,
            Feature::MeanSessionMinutes | Feature::RelativeTimeOnline => Dimension::Consistency,
            Feature::DowPeriodicity | Feature::HodPeriodicity => Dimension::Regularity,
            Feature::MeanDelayDays => Dimension::Proactivity,
            Feature::PauseRate | Feature::SpeedChanges => Dimension::Control,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Feature::TimeOnlineHours => "time_online_hours",
            Feature::VideoClicks => "video_clicks",
            Feature::MeanSessionMinutes => "mean_session_minutes",
            Feature::RelativeTimeOnline => "relative_time_online",
            Feature::DowPeriodicity => "dow_periodicity",
            Feature::HodPeriodicity => "hod_periodicity",
            Feature::MeanDelayDays => "mean_delay_days",
            Feature::PauseRate => "pause_rate",
            Feature::SpeedChanges => "speed_changes",
        }
    }

    /// Human-readable label with unit, used in chart axes and captions.
    pub fn label(self) -> &'static str {
        match self {
            Feature::TimeOnlineHours => "time online (hours)",
            Feature::VideoClicks => "clicks on videos",
            Feature::MeanSessionMinutes => "mean session duration (minutes)",
            Feature::RelativeTimeOnline => "time online relative to the class",
            Feature::DowPeriodicity => "day-of-the-week periodicity",
            Feature::HodPeriodicity => "hour-of-the-day periodicity",
            Feature::MeanDelayDays => "delay to watch the lecture videos (days)",
            Feature::PauseRate => "video pauses per hour",
            Feature::SpeedChanges => "video speed changes",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Feature::TimeOnlineHours => "hours",
            Feature::VideoClicks => "clicks",
            Feature::MeanSessionMinutes => "minutes",
            Feature::RelativeTimeOnline => "ratio to class mean",
            Feature::DowPeriodicity | Feature::HodPeriodicity => "score (0-1)",
            Feature::MeanDelayDays => "days",
            Feature::PauseRate => "pauses per hour",
            Feature::SpeedChanges => "changes",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Feature::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown feature {s:?}")))
    }
}

/// Weekly series of one feature for one student.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSeries {
    pub student_id: StudentId,
    pub dimension: Dimension,
    pub feature_name: String,
    pub values: Vec<f64>,
}

/// Student → weekly values for one feature.
pub type FeatureTable = BTreeMap<StudentId, Vec<f64>>;

/// Class-wide activity aggregates used by the aggregated dashboard charts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortActivity {
    /// Events per weekday, Monday first.
    pub dow_counts: [u64; 7],
    pub hod_counts: [u64; 24],
    /// Per week: students who watched every scheduled video before its
    /// session, students who watched all of them but some late, and students
    /// who missed at least one.
    pub video_composition: Vec<VideoComposition>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoComposition {
    pub before: u32,
    pub after: u32,
    pub not_watched: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrixSet {
    pub roster: Vec<StudentId>,
    pub weeks: WeekRange,
    features: BTreeMap<Feature, BTreeMap<StudentId, FeatureSeries>>,
    /// Weeks with no scheduled content; Proactivity is 0 there.
    pub unscheduled_weeks: Vec<u32>,
    pub activity: CohortActivity,
}

impl FeatureMatrixSet {
    pub fn series(&self, feature: Feature) -> &BTreeMap<StudentId, FeatureSeries> {
        &self.features[&feature]
    }

    pub fn values(&self, feature: Feature, student: &str) -> Option<&[f64]> {
        self.features
            .get(&feature)
            .and_then(|m| m.get(student))
            .map(|s| s.values.as_slice())
    }

    /// Series of `feature` keyed by student, in roster order.
    pub fn table(&self, feature: Feature) -> FeatureTable {
        self.series(feature)
            .iter()
            .map(|(k, s)| (k.clone(), s.values.clone()))
            .collect()
    }

    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    /// Class mean per week of one feature.
    pub fn cohort_mean(&self, feature: Feature) -> Vec<f64> {
        self.group_mean(feature, self.roster.iter().map(String::as_str))
    }

    /// Mean per week of `feature` over the given students.
    pub fn group_mean<'a>(
        &self,
        feature: Feature,
        members: impl IntoIterator<Item = &'a str>,
    ) -> Vec<f64> {
        let mut acc = vec![0.0; self.weeks.len()];
        let mut n = 0usize;
        for student in members {
            if let Some(values) = self.values(feature, student) {
                for (a, v) in acc.iter_mut().zip(values) {
                    *a += v;
                }
                n += 1;
            }
        }
        if n > 0 {
            for a in &mut acc {
                *a /= n as f64;
            }
        }
        acc
    }

    /// Checks roster coverage, shapes, finiteness and value bounds.
    pub fn validate(&self) -> Result<()> {
        if self.roster.is_empty() {
            return Err(Error::RosterMismatch("empty roster".into()));
        }
        let roster: BTreeSet<&str> = self.roster.iter().map(String::as_str).collect();
        for feature in Feature::ALL {
            let map = self.features.get(&feature).ok_or_else(|| {
                Error::RosterMismatch(format!("feature {feature} missing"))
            })?;
            let keys: BTreeSet<&str> = map.keys().map(String::as_str).collect();
            if keys != roster {
                return Err(Error::RosterMismatch(format!(
                    "feature {feature} covers {} students, roster has {}",
                    keys.len(),
                    roster.len()
                )));
            }
            for series in map.values() {
                if series.values.len() != self.weeks.len() {
                    return Err(Error::LengthMismatch {
                        expected: self.weeks.len(),
                        found: series.values.len(),
                    });
                }
                for &v in &series.values {
                    let ok = v.is_finite()
                        && match feature.dimension() {
                            Dimension::Regularity => (0.0..=1.0).contains(&v),
                            Dimension::Proactivity => true,
                            _ => v >= 0.0,
                        };
                    if !ok {
                        return Err(Error::InvalidParameter(format!(
                            "{feature} of {} has out-of-range value {v}",
                            series.student_id
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn zero_table(roster: &[StudentId], weeks: WeekRange) -> FeatureTable {
    roster
        .iter()
        .map(|s| (s.clone(), vec![0.0; weeks.len()]))
        .collect()
}

fn overlap_secs(start: Timestamp, end: Timestamp, lo: Timestamp, hi: Timestamp) -> i64 {
    let s = if start > lo { start } else { lo };
    let e = if end < hi { end } else { hi };
    (e - s).num_seconds().max(0)
}

/// Adds each session's duration to the weeks it overlaps, split by time.
fn session_hours<'a>(
    sessions: impl IntoIterator<Item = &'a Session>,
    calendar: &Calendar,
    roster: &[StudentId],
    weeks: WeekRange,
) -> FeatureTable {
    let mut table = zero_table(roster, weeks);
    for session in sessions {
        let Some(row) = table.get_mut(&session.student_id) else {
            continue;
        };
        for week in weeks.weeks() {
            let secs = overlap_secs(
                session.start,
                session.end,
                calendar.week_start(week),
                calendar.week_end(week),
            );
            if secs > 0 {
                row[(week - weeks.from) as usize] += secs as f64 / 3600.0;
            }
        }
    }
    table
}

fn week_slot(calendar: &Calendar, weeks: WeekRange, ts: Timestamp) -> Option<usize> {
    let week = calendar.week_of(ts);
    u32::try_from(week).ok().and_then(|w| weeks.offset(w))
}

/// `time_online_hours` and `video_clicks`.
pub fn effort_features(
    sessions: &[Session],
    events: &[ClickEvent],
    calendar: &Calendar,
    roster: &[StudentId],
    weeks: WeekRange,
) -> Result<BTreeMap<Feature, FeatureTable>> {
    if weeks.is_empty() {
        return Err(Error::WeekRangeEmpty);
    }
    let time = session_hours(sessions, calendar, roster, weeks);
    let mut clicks = zero_table(roster, weeks);
    for event in events.iter().filter(|e| e.event_type.is_video()) {
        if let (Some(row), Some(slot)) = (
            clicks.get_mut(&event.student_id),
            week_slot(calendar, weeks, event.timestamp),
        ) {
            row[slot] += 1.0;
        }
    }
    Ok(BTreeMap::from([
        (Feature::TimeOnlineHours, time),
        (Feature::VideoClicks, clicks),
    ]))
}

/// Class-wide time online per week.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortTotals {
    pub roster_size: usize,
    pub total_hours: Vec<f64>,
}

impl CohortTotals {
    pub fn from_time_online(time_online: &FeatureTable, weeks: WeekRange) -> Self {
        let mut total_hours = vec![0.0; weeks.len()];
        for row in time_online.values() {
            for (t, v) in total_hours.iter_mut().zip(row) {
                *t += v;
            }
        }
        CohortTotals {
            roster_size: time_online.len(),
            total_hours,
        }
    }

    pub fn mean_hours(&self, slot: usize) -> f64 {
        if self.roster_size == 0 {
            0.0
        } else {
            self.total_hours[slot] / self.roster_size as f64
        }
    }
}

/// `mean_session_minutes` (sessions starting in the week) and
/// `relative_time_online` (student time over class mean time).
pub fn consistency_features(
    sessions: &[Session],
    cohort: &CohortTotals,
    calendar: &Calendar,
    roster: &[StudentId],
    weeks: WeekRange,
) -> BTreeMap<Feature, FeatureTable> {
    let time = session_hours(sessions, calendar, roster, weeks);
    let mut sums = zero_table(roster, weeks);
    let mut counts = zero_table(roster, weeks);
    for session in sessions {
        if let (Some(sum), Some(slot)) = (
            sums.get_mut(&session.student_id),
            week_slot(calendar, weeks, session.start),
        ) {
            sum[slot] += session.duration_secs() as f64 / 60.0;
            counts.get_mut(&session.student_id).unwrap()[slot] += 1.0;
        }
    }
    let mean_minutes: FeatureTable = sums
        .into_iter()
        .map(|(student, sum)| {
            let n = &counts[&student];
            let row = sum
                .iter()
                .zip(n)
                .map(|(s, c)| if *c > 0.0 { s / c } else { 0.0 })
                .collect();
            (student, row)
        })
        .collect();
    let relative: FeatureTable = time
        .into_iter()
        .map(|(student, row)| {
            let rel = row
                .iter()
                .enumerate()
                .map(|(slot, t)| {
                    let mean = cohort.mean_hours(slot);
                    if mean > 0.0 {
                        t / mean
                    } else {
                        0.0
                    }
                })
                .collect();
            (student, rel)
        })
        .collect();
    BTreeMap::from([
        (Feature::MeanSessionMinutes, mean_minutes),
        (Feature::RelativeTimeOnline, relative),
    ])
}

/// `1 - H(p) / ln(bins)` of a count histogram; 0 for an empty histogram.
pub fn periodicity_score(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 || counts.len() < 2 {
        return 0.0;
    }
    let total = total as f64;
    let entropy: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * libm::log(p)
        })
        .sum();
    (1.0 - entropy / libm::log(counts.len() as f64)).clamp(0.0, 1.0)
}

/// Day-of-week and hour-of-day periodicity of each week's events.
pub fn regularity_features(
    events: &[ClickEvent],
    calendar: &Calendar,
    roster: &[StudentId],
    weeks: WeekRange,
) -> BTreeMap<Feature, FeatureTable> {
    let mut dow_hist: BTreeMap<&str, Vec<[u64; 7]>> = BTreeMap::new();
    let mut hod_hist: BTreeMap<&str, Vec<[u64; 24]>> = BTreeMap::new();
    for student in roster {
        dow_hist.insert(student, vec![[0; 7]; weeks.len()]);
        hod_hist.insert(student, vec![[0; 24]; weeks.len()]);
    }
    for event in events {
        let Some(slot) = week_slot(calendar, weeks, event.timestamp) else {
            continue;
        };
        if let Some(d) = dow_hist.get_mut(event.student_id.as_str()) {
            d[slot][event.timestamp.weekday().num_days_from_monday() as usize] += 1;
            hod_hist.get_mut(event.student_id.as_str()).unwrap()[slot]
                [event.timestamp.hour() as usize] += 1;
        }
    }
    let dow = dow_hist
        .into_iter()
        .map(|(s, h)| (s.into(), h.iter().map(|w| periodicity_score(w)).collect()))
        .collect();
    let hod = hod_hist
        .into_iter()
        .map(|(s, h)| (s.into(), h.iter().map(|w| periodicity_score(w)).collect()))
        .collect();
    BTreeMap::from([(Feature::DowPeriodicity, dow), (Feature::HodPeriodicity, hod)])
}

/// Output of [`proactivity_feature`].
#[derive(Debug, Clone, PartialEq)]
pub struct Proactivity {
    pub mean_delay_days: FeatureTable,
    /// Weeks of the range with no scheduled video.
    pub unscheduled_weeks: Vec<u32>,
    pub composition: Vec<VideoComposition>,
}

fn first_plays(events: &[ClickEvent]) -> BTreeMap<(&str, &str), Timestamp> {
    let mut first: BTreeMap<(&str, &str), Timestamp> = BTreeMap::new();
    for event in events
        .iter()
        .filter(|e| e.event_type == EventType::VideoPlay)
    {
        let Some(video) = event.object_id.as_deref() else {
            continue;
        };
        first
            .entry((event.student_id.as_str(), video))
            .and_modify(|t| {
                if event.timestamp < *t {
                    *t = event.timestamp;
                }
            })
            .or_insert(event.timestamp);
    }
    first
}

/// Signed days between the first play of each scheduled video and its
/// session start, averaged over the week's videos. Unplayed videos count as
/// `cap_days`.
pub fn proactivity_feature(
    events: &[ClickEvent],
    schedule: &CourseSchedule,
    roster: &[StudentId],
    weeks: WeekRange,
    cap_days: f64,
) -> Proactivity {
    let first = first_plays(events);
    let mut table = zero_table(roster, weeks);
    let mut composition = vec![VideoComposition::default(); weeks.len()];
    let mut unscheduled = Vec::new();
    for week in weeks.weeks() {
        let slot = (week - weeks.from) as usize;
        let entries: Vec<_> = schedule.entries_in_week(week).collect();
        if entries.is_empty() {
            unscheduled.push(week);
            continue;
        }
        for student in roster {
            let mut sum = 0.0;
            let mut all_watched = true;
            let mut all_early = true;
            for entry in &entries {
                match first.get(&(student.as_str(), entry.video_id.as_str())) {
                    Some(played) => {
                        let delay = (*played - entry.session_start).num_seconds() as f64 / 86_400.0;
                        all_early &= delay <= 0.0;
                        sum += delay;
                    }
                    None => {
                        all_watched = false;
                        sum += cap_days;
                    }
                }
            }
            table.get_mut(student).unwrap()[slot] = sum / entries.len() as f64;
            let c = &mut composition[slot];
            match (all_watched, all_early) {
                (false, _) => c.not_watched += 1,
                (true, true) => c.before += 1,
                (true, false) => c.after += 1,
            }
        }
    }
    Proactivity {
        mean_delay_days: table,
        unscheduled_weeks: unscheduled,
        composition,
    }
}

/// `pause_rate` (pauses per hour of sessions with video activity) and
/// `speed_changes`.
pub fn control_features(
    sessions: &[Session],
    events: &[ClickEvent],
    calendar: &Calendar,
    roster: &[StudentId],
    weeks: WeekRange,
) -> BTreeMap<Feature, FeatureTable> {
    let video_hours = session_hours(sessions.iter().filter(|s| s.has_video), calendar, roster, weeks);
    let mut pauses = zero_table(roster, weeks);
    let mut speed = zero_table(roster, weeks);
    for event in events {
        let target = match event.event_type {
            EventType::VideoPause => &mut pauses,
            EventType::VideoSpeedChange => &mut speed,
            _ => continue,
        };
        if let (Some(row), Some(slot)) = (
            target.get_mut(&event.student_id),
            week_slot(calendar, weeks, event.timestamp),
        ) {
            row[slot] += 1.0;
        }
    }
    let rate = pauses
        .into_iter()
        .map(|(student, counts)| {
            let hours = &video_hours[&student];
            let row = counts
                .iter()
                .zip(hours)
                .map(|(c, h)| if *h > 0.0 { c / h } else { 0.0 })
                .collect();
            (student, row)
        })
        .collect();
    BTreeMap::from([(Feature::PauseRate, rate), (Feature::SpeedChanges, speed)])
}

fn cohort_activity(
    events: &[ClickEvent],
    calendar: &Calendar,
    weeks: WeekRange,
    roster: &[StudentId],
    composition: Vec<VideoComposition>,
) -> CohortActivity {
    let members: BTreeSet<&str> = roster.iter().map(String::as_str).collect();
    let mut dow_counts = [0u64; 7];
    let mut hod_counts = [0u64; 24];
    for event in events {
        if week_slot(calendar, weeks, event.timestamp).is_none()
            || !members.contains(event.student_id.as_str())
        {
            continue;
        }
        dow_counts[event.timestamp.weekday().num_days_from_monday() as usize] += 1;
        hod_counts[event.timestamp.hour() as usize] += 1;
    }
    CohortActivity {
        dow_counts,
        hod_counts,
        video_composition: composition,
    }
}

/// Assembles per-feature tables into a validated [`FeatureMatrixSet`].
pub fn build_feature_matrix(
    roster: &[StudentId],
    weeks: WeekRange,
    tables: BTreeMap<Feature, FeatureTable>,
    unscheduled_weeks: Vec<u32>,
    activity: CohortActivity,
) -> Result<FeatureMatrixSet> {
    if roster.is_empty() {
        return Err(Error::RosterMismatch("empty roster".into()));
    }
    let mut features = BTreeMap::new();
    for (feature, table) in tables {
        let map = table
            .into_iter()
            .map(|(student, values)| {
                let series = FeatureSeries {
                    student_id: student.clone(),
                    dimension: feature.dimension(),
                    feature_name: feature.name().into(),
                    values,
                };
                (student, series)
            })
            .collect();
        features.insert(feature, map);
    }
    let set = FeatureMatrixSet {
        roster: roster.to_vec(),
        weeks,
        features,
        unscheduled_weeks,
        activity,
    };
    set.validate()?;
    Ok(set)
}

/// Computes all nine features from sorted events and their sessions.
pub fn extract_features(
    events: &[ClickEvent],
    sessions: &[Session],
    schedule: &CourseSchedule,
    roster: &[StudentId],
    weeks: WeekRange,
    proactivity_cap_days: f64,
) -> Result<FeatureMatrixSet> {
    let calendar = &schedule.calendar;
    let mut tables = effort_features(sessions, events, calendar, roster, weeks)?;
    let cohort = CohortTotals::from_time_online(&tables[&Feature::TimeOnlineHours], weeks);
    tables.extend(consistency_features(sessions, &cohort, calendar, roster, weeks));
    tables.extend(regularity_features(events, calendar, roster, weeks));
    let proactivity = proactivity_feature(events, schedule, roster, weeks, proactivity_cap_days);
    tables.insert(Feature::MeanDelayDays, proactivity.mean_delay_days);
    tables.extend(control_features(sessions, events, calendar, roster, weeks));
    let activity = cohort_activity(events, calendar, weeks, roster, proactivity.composition);
    build_feature_matrix(roster, weeks, tables, proactivity.unscheduled_weeks, activity)
}
