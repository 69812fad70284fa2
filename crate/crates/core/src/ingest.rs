//! Canonical clickstream records, sessionization and course metadata.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use chrono::TimeDelta;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, StudentId, Timestamp};

/// Default inactivity gap that closes a session.
pub const DEFAULT_GAP_MINUTES: i64 = 30;

pub const SECONDS_PER_WEEK: i64 = 7 * 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    VideoPlay,
    VideoPause,
    VideoSpeedChange,
    VideoSeek,
    PageView,
    SessionPing,
}

impl EventType {
    pub const ALL: [EventType; 6] = [
        EventType::VideoPlay,
        EventType::VideoPause,
        EventType::VideoSpeedChange,
        EventType::VideoSeek,
        EventType::PageView,
        EventType::SessionPing,
    ];

    pub fn is_video(self) -> bool {
        matches!(
            self,
            EventType::VideoPlay
                | EventType::VideoPause
                | EventType::VideoSpeedChange
                | EventType::VideoSeek
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventType::VideoPlay => "video_play",
            EventType::VideoPause => "video_pause",
            EventType::VideoSpeedChange => "video_speed_change",
            EventType::VideoSeek => "video_seek",
            EventType::PageView => "page_view",
            EventType::SessionPing => "session_ping",
        }
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EventType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidEvent(format!("unknown event type {s:?}")))
    }
}

/// One timestamped LMS interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickEvent {
    pub student_id: StudentId,
    pub timestamp: Timestamp,
    pub event_type: EventType,
    pub object_id: Option<String>,
    /// Playback speed, only meaningful for `video_speed_change`.
    pub value: Option<f64>,
}

impl ClickEvent {
    pub fn new(student_id: impl Into<String>, timestamp: Timestamp, event_type: EventType) -> Self {
        ClickEvent {
            student_id: student_id.into(),
            timestamp,
            event_type,
            object_id: None,
            value: None,
        }
    }

    pub fn with_object(mut self, object_id: impl Into<String>) -> Self {
        self.object_id = Some(object_id.into());
        self
    }

    pub fn with_value(mut self, value: f64) -> Self {
        self.value = Some(value);
        self
    }

    /// Checks the per-record invariants.
    pub fn validate(&self) -> Result<()> {
        if self.student_id.is_empty() {
            return Err(Error::InvalidEvent("empty student_id".into()));
        }
        if self.event_type.is_video() && self.object_id.as_deref().is_none_or(str::is_empty) {
            return Err(Error::InvalidEvent(format!(
                "{} requires an object_id",
                self.event_type
            )));
        }
        if self.event_type == EventType::VideoSpeedChange {
            match self.value {
                Some(v) if v.is_finite() && v > 0.0 => {}
                Some(v) => {
                    return Err(Error::InvalidEvent(format!(
                        "video_speed_change needs a positive speed, got {v}"
                    )))
                }
                None => {
                    return Err(Error::InvalidEvent(
                        "video_speed_change requires a value".into(),
                    ))
                }
            }
        }
        Ok(())
    }
}

/// Sorts events by `(student_id, timestamp)`; stable for equal keys.
pub fn sort_events(events: &mut [ClickEvent]) {
    events.sort_by(|a, b| {
        a.student_id
            .cmp(&b.student_id)
            .then(a.timestamp.cmp(&b.timestamp))
    });
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub student_id: StudentId,
    pub start: Timestamp,
    pub end: Timestamp,
    pub event_count: usize,
    /// Whether any `video_*` event happened inside the session.
    pub has_video: bool,
}

impl Session {
    pub fn duration(&self) -> TimeDelta {
        self.end - self.start
    }

    pub fn duration_secs(&self) -> i64 {
        self.duration().num_seconds()
    }
}

/// Splits each student's event stream at gaps strictly larger than
/// `gap_threshold`. Events must be sorted by `(student_id, timestamp)`.
///
/// Singleton sessions have zero duration.
pub fn sessionize(events: &[ClickEvent], gap_threshold: TimeDelta) -> Vec<Session> {
    let mut sessions: Vec<Session> = Vec::new();
    for event in events {
        if let Some(current) = sessions.last_mut() {
            if current.student_id == event.student_id
                && event.timestamp - current.end <= gap_threshold
            {
                debug_assert!(event.timestamp >= current.end, "events must be sorted");
                current.end = event.timestamp;
                current.event_count += 1;
                current.has_video |= event.event_type.is_video();
                continue;
            }
        }
        sessions.push(Session {
            student_id: event.student_id.clone(),
            start: event.timestamp,
            end: event.timestamp,
            event_count: 1,
            has_video: event.event_type.is_video(),
        });
    }
    sessions
}

/// Inclusive, 1-based range of course weeks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WeekRange {
    pub from: u32,
    pub to: u32,
}

impl WeekRange {
    pub fn new(from: u32, to: u32) -> Result<Self> {
        if from == 0 || to < from {
            return Err(Error::WeekRangeEmpty);
        }
        Ok(WeekRange { from, to })
    }

    pub fn len(&self) -> usize {
        (self.to - self.from + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.to < self.from
    }

    pub fn weeks(&self) -> impl Iterator<Item = u32> {
        self.from..=self.to
    }

    /// Position of `week` inside the range.
    pub fn offset(&self, week: u32) -> Option<usize> {
        (self.from..=self.to)
            .contains(&week)
            .then(|| (week - self.from) as usize)
    }
}

impl fmt::Display for WeekRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.from, self.to)
    }
}

/// Course calendar: 7-day windows starting at `week_zero`, no DST handling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Calendar {
    pub week_zero: Timestamp,
    pub weeks: u32,
}

impl Calendar {
    pub fn week_start(&self, week: u32) -> Timestamp {
        self.week_zero + TimeDelta::seconds(SECONDS_PER_WEEK * (i64::from(week) - 1))
    }

    pub fn week_end(&self, week: u32) -> Timestamp {
        self.week_start(week) + TimeDelta::seconds(SECONDS_PER_WEEK)
    }

    /// Week index of an instant; values before `week_zero` are `<= 0`.
    pub fn week_of(&self, ts: Timestamp) -> i64 {
        (ts - self.week_zero).num_seconds().div_euclid(SECONDS_PER_WEEK) + 1
    }

    pub fn full_range(&self) -> Result<WeekRange> {
        WeekRange::new(1, self.weeks)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub video_id: String,
    pub week_index: u32,
    /// Start of the in-person session the video prepares.
    pub session_start: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CourseSchedule {
    pub calendar: Calendar,
    entries: Vec<ScheduleEntry>,
}

impl CourseSchedule {
    /// Validates raw `(video_id, week_index, session_start)` rows.
    pub fn new(
        calendar: Calendar,
        rows: impl IntoIterator<Item = (String, i64, Timestamp)>,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut entries = Vec::new();
        for (video_id, week, session_start) in rows {
            if week < 1 || week > i64::from(calendar.weeks) {
                return Err(Error::ScheduleOutOfRange {
                    video_id,
                    week,
                    weeks: calendar.weeks,
                });
            }
            let week_index = week as u32;
            if session_start < calendar.week_start(week_index)
                || session_start >= calendar.week_end(week_index)
            {
                return Err(Error::ScheduleOutOfRange {
                    video_id,
                    week,
                    weeks: calendar.weeks,
                });
            }
            if !seen.insert(video_id.clone()) {
                return Err(Error::DuplicateVideoId(video_id));
            }
            entries.push(ScheduleEntry {
                video_id,
                week_index,
                session_start,
            });
        }
        Ok(CourseSchedule { calendar, entries })
    }

    pub fn entries(&self) -> &[ScheduleEntry] {
        &self.entries
    }

    pub fn entries_in_week(&self, week: u32) -> impl Iterator<Item = &ScheduleEntry> {
        self.entries.iter().filter(move |e| e.week_index == week)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Final grades; higher is better, scale is arbitrary.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GradeBook {
    grades: BTreeMap<StudentId, f64>,
}

impl GradeBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, student_id: impl Into<String>, grade: f64) -> Result<()> {
        let student_id = student_id.into();
        if student_id.is_empty() {
            return Err(Error::InvalidParameter("graded student_id is empty".into()));
        }
        if !grade.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grade for {student_id} is not finite"
            )));
        }
        self.grades.insert(student_id, grade);
        Ok(())
    }

    pub fn get(&self, student_id: &str) -> Option<f64> {
        self.grades.get(student_id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StudentId, f64)> {
        self.grades.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.grades.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grades.is_empty()
    }
}

impl FromIterator<(String, f64)> for GradeBook {
    fn from_iter<I: IntoIterator<Item = (String, f64)>>(iter: I) -> Self {
        GradeBook {
            grades: iter
                .into_iter()
                .filter(|(k, v)| !k.is_empty() && v.is_finite())
                .collect(),
        }
    }
}

/// Sorted, de-duplicated student ids present in the event log.
pub fn roster_of(events: &[ClickEvent]) -> Vec<StudentId> {
    events
        .iter()
        .map(|e| e.student_id.to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}
