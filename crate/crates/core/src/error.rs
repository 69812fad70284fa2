use alloc::string::String;

use crate::features::Dimension;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("series must not be empty")]
    EmptySeries,

    #[error("series length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("roster mismatch: {0}")]
    RosterMismatch(String),

    #[error("k={k} out of range for n={n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("week range is empty")]
    WeekRangeEmpty,

    #[error("missing clustering for dimension {0:?}")]
    MissingDimension(Dimension),

    #[error("schedule entry {video_id} has week {week} outside [1, {weeks}]")]
    ScheduleOutOfRange { video_id: String, week: i64, weeks: u32 },

    #[error("video {0} is scheduled more than once")]
    DuplicateVideoId(String),

    #[error("invalid event: {0}")]
    InvalidEvent(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = core::result::Result<T, Error>;
