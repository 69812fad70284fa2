use std::path::PathBuf;

use srl_dash_core::insights::{PageId, View};
use srl_dash_core::ingest::WeekRange;

use crate::formats::IngestReport;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("not found: {0}")]
    NotFound(String),

    #[error("invalid week range {from}-{to}")]
    InvalidRange { from: u32, to: u32 },

    #[error("malformed usage event: {0}")]
    MalformedEvent(String),

    #[error("incomplete run: {0}")]
    IncompleteRun(String),

    #[error("{} of {} event lines malformed (tolerance {tolerance})", report.issues.len(), report.lines)]
    TooManyMalformed { report: Box<IngestReport>, tolerance: f64 },

    #[error("{path}:{line}: {reason}")]
    Parse { path: String, line: u64, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error("bad request: {0}")]
    BadRequest(String),

    #[error("internal: {0}")]
    Internal(String),

    #[error("unauthorized")]
    Unauthorized,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Core(#[from] srl_dash_core::Error),
}

impl ServiceError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ServiceError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn missing_bundle(course_id: &str, weeks: WeekRange, page: PageId, view: View) -> Self {
        ServiceError::NotFound(format!("{course_id} weeks {weeks} {page}/{view}"))
    }
}

pub type Result<T> = std::result::Result<T, ServiceError>;
