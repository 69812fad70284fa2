//! Run configuration file (TOML).
//!
//! ```toml
//! [course]
//! id = "c1"
//! week_zero = "2023-02-20T00:00:00Z"
//! weeks = 10
//!
//! [pipeline]
//! gap_threshold_minutes = 30
//! k_profiles = 5
//! normalize = true
//! proactivity_cap_days = 14.0
//! seed = 42
//! week_ranges = [{ from = 1, to = 10 }, { from = 5, to = 9 }]
//!
//! [pipeline.k_per_dimension]
//! effort = 2
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use srl_dash_core::ingest::Calendar;
use srl_dash_core::pipeline::PipelineConfig;
use srl_dash_core::Timestamp;

use crate::error::{Result, ServiceError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CourseConfig {
    pub id: String,
    /// Monday 00:00 UTC before week 1.
    pub week_zero: Timestamp,
    pub weeks: u32,
}

impl CourseConfig {
    pub fn calendar(&self) -> Calendar {
        Calendar {
            week_zero: self.week_zero,
            weeks: self.weeks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub course: CourseConfig,
    #[serde(default)]
    pub pipeline: PipelineConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ServiceError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.course.id.trim().is_empty() {
            return Err(ServiceError::Config("course.id is empty".into()));
        }
        if self.course.weeks == 0 {
            return Err(ServiceError::Config("course.weeks must be at least 1".into()));
        }
        self.pipeline.validate()?;
        self.pipeline.ranges(self.course.weeks)?;
        Ok(())
    }
}
