//! Weekly statistics per dimension and week-over-week trends.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::text::FLAT_BAND;
use crate::features::{Dimension, Feature, FeatureMatrixSet};
use crate::ingest::WeekRange;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Up,
    Down,
    Flat,
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionStat {
    pub stat: f64,
    pub trend: Trend,
    /// Percent change from the previous week; absent for the first week and
    /// when the previous value is zero.
    pub delta_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeeklySummary {
    pub week_index: u32,
    pub stats: BTreeMap<Dimension, DimensionStat>,
}

/// Trend of `current` against `previous`; `None` marks the first week.
pub fn trend(previous: Option<f64>, current: f64) -> (Trend, Option<f64>) {
    let Some(prev) = previous else {
        return (Trend::Undefined, None);
    };
    let delta = current - prev;
    let trend = if delta == 0.0 || libm::fabs(delta) < FLAT_BAND * libm::fabs(prev) {
        Trend::Flat
    } else if delta > 0.0 {
        Trend::Up
    } else {
        Trend::Down
    };
    let pct = (prev != 0.0).then(|| delta / libm::fabs(prev) * 100.0);
    (trend, pct)
}

/// The per-week headline value of a dimension for the given weekly means.
pub fn headline_series(dimension: Dimension, mean: impl Fn(Feature) -> Vec<f64>) -> Vec<f64> {
    match dimension {
        Dimension::Regularity => {
            let dow = mean(Feature::DowPeriodicity);
            let hod = mean(Feature::HodPeriodicity);
            dow.iter().zip(&hod).map(|(a, b)| (a + b) / 2.0).collect()
        }
        d => mean(d.features()[0]),
    }
}

/// Cohort statistic per dimension for every week of `weeks`.
pub fn weekly_summary(features: &FeatureMatrixSet, weeks: WeekRange) -> Result<Vec<WeeklySummary>> {
    if weeks.is_empty() {
        return Err(Error::WeekRangeEmpty);
    }
    let covered = features.weeks;
    if weeks.from < covered.from || weeks.to > covered.to {
        return Err(Error::InvalidParameter(alloc::format!(
            "weeks {weeks} outside computed range {covered}"
        )));
    }
    let lead = (weeks.from - covered.from) as usize;
    let series: BTreeMap<Dimension, Vec<f64>> = Dimension::ALL
        .iter()
        .map(|&d| (d, headline_series(d, |f| features.cohort_mean(f))))
        .collect();
    Ok(weeks
        .weeks()
        .enumerate()
        .map(|(i, week)| {
            let stats = series
                .iter()
                .map(|(&d, values)| {
                    let current = values[lead + i];
                    let previous = (i > 0).then(|| values[lead + i - 1]);
                    let (trend, delta_pct) = trend(previous, current);
                    (
                        d,
                        DimensionStat {
                            stat: current,
                            trend,
                            delta_pct,
                        },
                    )
                })
                .collect();
            WeeklySummary {
                week_index: week,
                stats,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trend_examples() {
        let (t, pct) = trend(Some(2.5), 3.2);
        assert_eq!(t, Trend::Up);
        assert!((pct.unwrap() - 28.0).abs() < 1e-9);
        assert_eq!(trend(None, 3.0), (Trend::Undefined, None));
        assert_eq!(trend(Some(3.0), 3.0), (Trend::Flat, Some(0.0)));
        assert_eq!(trend(Some(100.0), 100.5).0, Trend::Flat);
        assert_eq!(trend(Some(100.0), 98.0).0, Trend::Down);
        assert_eq!(trend(Some(0.0), 1.0), (Trend::Up, None));
        assert_eq!(trend(Some(-2.0), -1.0).0, Trend::Up);
        assert!((trend(Some(-2.0), -1.0).1.unwrap() - 50.0).abs() < 1e-12);
    }
}
