//! Dashboard content bundles: one per page and view for a week range.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::chart::{ChartSpec, DataKind, Series, XAxis};
use super::summary::{headline_series, weekly_summary, WeeklySummary};
use super::text::caption_and_alttext;
use crate::cluster::{DimensionClustering, StudentProfile};
use crate::features::{Dimension, Feature, FeatureMatrixSet};
use crate::ingest::WeekRange;
use crate::{Error, Result, Timestamp};

pub const SCHEMA_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PageId {
    Summary,
    Profiles,
    Proactivity,
    Effort,
    Consistency,
    Control,
    Regularity,
}

impl PageId {
    /// Menu order: overview pages, then behavior pages.
    pub const ALL: [PageId; 7] = [
        PageId::Summary,
        PageId::Profiles,
        PageId::Proactivity,
        PageId::Effort,
        PageId::Consistency,
        PageId::Control,
        PageId::Regularity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PageId::Summary => "summary",
            PageId::Profiles => "profiles",
            PageId::Proactivity => "proactivity",
            PageId::Effort => "effort",
            PageId::Consistency => "consistency",
            PageId::Control => "control",
            PageId::Regularity => "regularity",
        }
    }

    pub fn dimension(self) -> Option<Dimension> {
        match self {
            PageId::Summary | PageId::Profiles => None,
            PageId::Proactivity => Some(Dimension::Proactivity),
            PageId::Effort => Some(Dimension::Effort),
            PageId::Consistency => Some(Dimension::Consistency),
            PageId::Control => Some(Dimension::Control),
            PageId::Regularity => Some(Dimension::Regularity),
        }
    }

    /// Views that exist for this page.
    pub fn views(self) -> &'static [View] {
        match self.dimension() {
            None => &[View::Aggregated],
            Some(_) => &[View::Aggregated, View::Groups],
        }
    }
}

impl fmt::Display for PageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PageId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PageId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown page {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    Aggregated,
    Groups,
}

impl View {
    pub fn as_str(self) -> &'static str {
        match self {
            View::Aggregated => "aggregated",
            View::Groups => "groups",
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for View {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aggregated" => Ok(View::Aggregated),
            "groups" => Ok(View::Groups),
            _ => Err(Error::InvalidParameter(format!("unknown view {s:?}"))),
        }
    }
}

/// Every (page, view) pair that gets a bundle, in menu order.
pub fn bundle_kinds() -> Vec<(PageId, View)> {
    PageId::ALL
        .iter()
        .flat_map(|&p| p.views().iter().map(move |&v| (p, v)))
        .collect()
}

/// How a pipeline run was configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub run_id: String,
    pub seed: u64,
    pub roster_size: usize,
    pub k_per_dimension: BTreeMap<Dimension, usize>,
    pub k_profiles: usize,
    pub normalize: bool,
    pub gap_threshold_minutes: i64,
    pub proactivity_cap_days: f64,
    pub software_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartEntry {
    pub spec: ChartSpec,
    pub caption: String,
    pub alt_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileBlock {
    pub profile_id: usize,
    pub name: String,
    pub description: String,
    pub member_count: usize,
    pub grade_mean: Option<f64>,
    pub grade_sd: Option<f64>,
    /// "mean ± sd", or "n/a" when undefined.
    pub grade_text: String,
    pub labels: BTreeMap<Dimension, usize>,
    pub descriptors: BTreeMap<Dimension, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupBlock {
    pub label: usize,
    pub name: String,
    pub descriptor: String,
    pub member_count: usize,
    pub feature_means: BTreeMap<Feature, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PageStats {
    Summary { weeks: Vec<WeeklySummary> },
    Profiles { profiles: Vec<ProfileBlock> },
    Behavior {
        dimension: Dimension,
        cohort_means: BTreeMap<Feature, f64>,
        groups: Vec<GroupBlock>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentBundle {
    pub schema: String,
    pub course_id: String,
    pub week_range: WeekRange,
    pub page: PageId,
    pub view: View,
    pub title: String,
    pub charts: Vec<ChartEntry>,
    pub stats: PageStats,
    pub generated_at: Timestamp,
    pub run: RunMetadata,
}

impl ContentBundle {
    pub fn key(&self) -> (PageId, View) {
        (self.page, self.view)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| {
            Err(Error::InvalidParameter(format!(
                "bundle {}/{} weeks {}: {msg}",
                self.page, self.view, self.week_range
            )))
        };
        if self.schema != SCHEMA_VERSION {
            return bad(format!("schema {:?}", self.schema));
        }
        if !self.page.views().contains(&self.view) {
            return bad(String::from("page has no such view"));
        }
        if self.charts.is_empty() {
            return bad(String::from("no charts"));
        }
        for chart in &self.charts {
            if chart.caption.trim().is_empty() || chart.alt_text.trim().is_empty() {
                return bad(format!("chart {:?} lacks caption or alt text", chart.spec.title));
            }
            chart.spec.validate()?;
        }
        Ok(())
    }
}

/// Shared inputs of every bundle of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentContext {
    pub course_id: String,
    pub generated_at: Timestamp,
    pub run: RunMetadata,
}

fn entry(spec: ChartSpec, weeks: WeekRange) -> ChartEntry {
    let (caption, alt_text) = caption_and_alttext(&spec, weeks);
    ChartEntry {
        spec,
        caption,
        alt_text,
    }
}

fn bundle(
    ctx: &ContentContext,
    weeks: WeekRange,
    page: PageId,
    view: View,
    title: String,
    charts: Vec<ChartSpec>,
    stats: PageStats,
) -> ContentBundle {
    ContentBundle {
        schema: String::from(SCHEMA_VERSION),
        course_id: ctx.course_id.clone(),
        week_range: weeks,
        page,
        view,
        title,
        charts: charts.into_iter().map(|c| entry(c, weeks)).collect(),
        stats,
        generated_at: ctx.generated_at,
        run: ctx.run.clone(),
    }
}

fn grade_text(mean: Option<f64>, sd: Option<f64>) -> String {
    match (mean, sd) {
        (Some(m), Some(s)) => format!("{m:.2} \u{b1} {s:.2}"),
        (Some(m), None) => format!("{m:.2}"),
        _ => String::from("n/a"),
    }
}

fn summary_units(dimension: Dimension) -> &'static str {
    match dimension {
        Dimension::Effort => "Hours online per student",
        Dimension::Consistency => "Mean session length (minutes)",
        Dimension::Regularity => "Periodicity score (0-1)",
        Dimension::Proactivity => "Mean delay (days, negative = early)",
        Dimension::Control => "Pauses per video hour",
    }
}

pub fn summary_page_content(ctx: &ContentContext, features: &FeatureMatrixSet) -> Result<ContentBundle> {
    let weeks = features.weeks;
    let summary = weekly_summary(features, weeks)?;
    let charts = Dimension::ALL
        .iter()
        .map(|&d| {
            let y = headline_series(d, |f| features.cohort_mean(f));
            ChartSpec::new(DataKind::TimeSeries, format!("{} per week", d.title()), XAxis::Week, "Week", summary_units(d))
                .with_series(Series::weekly("Class average", weeks.weeks(), y))
        })
        .collect();
    Ok(bundle(
        ctx,
        weeks,
        PageId::Summary,
        View::Aggregated,
        String::from("Summary"),
        charts,
        PageStats::Summary { weeks: summary },
    ))
}

pub fn profile_name(profile: &StudentProfile) -> String {
    format!("Profile {}", profile.profile_id + 1)
}

/// Profile descriptions with grades, a pie of profile sizes and the weekly
/// time online of each profile.
pub fn profile_page_content(
    ctx: &ContentContext,
    profiles: &[StudentProfile],
    clusterings: &BTreeMap<Dimension, DimensionClustering>,
    features: &FeatureMatrixSet,
) -> Result<ContentBundle> {
    let weeks = features.weeks;
    let roster = features.roster.len() as u32;
    let mut blocks = Vec::with_capacity(profiles.len());
    for profile in profiles {
        let mut labels = BTreeMap::new();
        let mut descriptors = BTreeMap::new();
        let mut parts = Vec::new();
        for d in Dimension::ALL {
            let clustering = clusterings.get(&d).ok_or(Error::MissingDimension(d))?;
            let label = profile.label(d);
            let descriptor = String::from(clustering.descriptor(label));
            parts.push(format!("{}: {}", d.title(), descriptor));
            labels.insert(d, label);
            descriptors.insert(d, descriptor);
        }
        blocks.push(ProfileBlock {
            profile_id: profile.profile_id,
            name: profile_name(profile),
            description: parts.join("; "),
            member_count: profile.size(),
            grade_mean: profile.grade_mean,
            grade_sd: profile.grade_sd,
            grade_text: grade_text(profile.grade_mean, profile.grade_sd),
            labels,
            descriptors,
        });
    }
    let names: Vec<String> = profiles.iter().map(profile_name).collect();
    let sizes: Vec<f64> = profiles.iter().map(|p| p.size() as f64).collect();
    let pie = ChartSpec::new(DataKind::CategoricalProportion, "Students per profile", XAxis::Category, "", "Students")
        .with_series(Series::new("Profile size", names, sizes))
        .student_percentages(roster);
    let mut area = ChartSpec::new(
        DataKind::CategoricalTimeSeries,
        "Hours online per profile",
        XAxis::Week,
        "Week",
        "Mean hours online per student",
    );
    for profile in profiles {
        let y = features.group_mean(Feature::TimeOnlineHours, profile.members.iter().map(String::as_str));
        area = area.with_series(Series::weekly(profile_name(profile), weeks.weeks(), y));
    }
    Ok(bundle(
        ctx,
        weeks,
        PageId::Profiles,
        View::Aggregated,
        String::from("Student profiles"),
        alloc::vec![pie, area],
        PageStats::Profiles { profiles: blocks },
    ))
}

const WEEKDAYS: [&str; 7] = ["Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"];

fn group_name(label: usize, descriptor: &str) -> String {
    format!("Group {} ({descriptor})", label + 1)
}

fn feature_axis(feature: Feature) -> String {
    format!("{} ({})", feature.label(), feature.unit())
}

/// Aggregated or per-cluster view of one behavior dimension.
pub fn behavior_page_content(
    ctx: &ContentContext,
    dimension: Dimension,
    view: View,
    clustering: &DimensionClustering,
    features: &FeatureMatrixSet,
) -> Result<ContentBundle> {
    let weeks = features.weeks;
    let page = PageId::ALL
        .into_iter()
        .find(|p| p.dimension() == Some(dimension))
        .expect("every dimension has a page");
    let mut charts = Vec::new();
    for &feature in dimension.features() {
        let chart = match view {
            View::Aggregated => ChartSpec::new(DataKind::TimeSeries, feature.label(), XAxis::Week, "Week", feature_axis(feature))
                .with_series(Series::weekly("Class average", weeks.weeks(), features.cohort_mean(feature))),
            View::Groups => {
                let mut chart = ChartSpec::new(
                    DataKind::GroupComparisonTimeSeries,
                    format!("{} by group", feature.label()),
                    XAxis::Week,
                    "Week",
                    feature_axis(feature),
                );
                for label in 0..clustering.k {
                    let y = features.group_mean(feature, clustering.members(label));
                    chart = chart.with_series(Series::weekly(
                        group_name(label, clustering.descriptor(label)),
                        weeks.weeks(),
                        y,
                    ));
                }
                chart
            }
        };
        charts.push(chart);
    }
    if view == View::Aggregated {
        let activity = &features.activity;
        match dimension {
            Dimension::Regularity => {
                charts.push(
                    ChartSpec::new(DataKind::Frequency, "Activity by day of week", XAxis::Weekday, "Day of week", "Events")
                        .with_series(Series::new(
                            "Events",
                            WEEKDAYS.iter().map(|d| String::from(*d)).collect(),
                            activity.dow_counts.iter().map(|&c| c as f64).collect(),
                        )),
                );
                charts.push(
                    ChartSpec::new(DataKind::Frequency, "Activity by hour of day", XAxis::Hour, "Hour of day", "Events")
                        .with_series(Series::new(
                            "Events",
                            (0..24).map(|h| format!("{h:02}")).collect(),
                            activity.hod_counts.iter().map(|&c| c as f64).collect(),
                        )),
                );
            }
            Dimension::Proactivity => {
                let comp = &activity.video_composition;
                let before = comp.iter().map(|c| c.before as f64).collect();
                let after = comp.iter().map(|c| c.after as f64).collect();
                charts.push(
                    ChartSpec::new(
                        DataKind::CompositionOverTime,
                        "Students watching the week's videos before or after the session",
                        XAxis::Week,
                        "Week",
                        "Students",
                    )
                    .with_series(Series::weekly("Watched before the session", weeks.weeks(), before))
                    .with_series(Series::weekly("Watched after the session", weeks.weeks(), after))
                    .student_percentages(features.roster.len() as u32)
                    .with_complement("Did not watch"),
                );
            }
            _ => {}
        }
    }
    let cohort_means = dimension
        .features()
        .iter()
        .map(|&f| {
            let weekly = features.cohort_mean(f);
            let mean = if weekly.is_empty() { 0.0 } else { weekly.iter().sum::<f64>() / weekly.len() as f64 };
            (f, mean)
        })
        .collect();
    let sizes = clustering.sizes();
    let groups = (0..clustering.k)
        .map(|label| GroupBlock {
            label,
            name: group_name(label, clustering.descriptor(label)),
            descriptor: String::from(clustering.descriptor(label)),
            member_count: sizes[label],
            feature_means: clustering.feature_means.get(&label).cloned().unwrap_or_default(),
        })
        .collect();
    let title = match view {
        View::Aggregated => String::from(dimension.title()),
        View::Groups => format!("{} groups", dimension.title()),
    };
    Ok(bundle(
        ctx,
        weeks,
        page,
        view,
        title,
        charts,
        PageStats::Behavior {
            dimension,
            cohort_means,
            groups,
        },
    ))
}

/// All bundles for one week range, in [`bundle_kinds`] order. Each bundle is
/// validated before it is returned.
pub fn build_all_content(
    ctx: &ContentContext,
    features: &FeatureMatrixSet,
    clusterings: &BTreeMap<Dimension, DimensionClustering>,
    profiles: &[StudentProfile],
) -> Result<Vec<ContentBundle>> {
    let mut out = Vec::with_capacity(12);
    for (page, view) in bundle_kinds() {
        let bundle = match page.dimension() {
            None if page == PageId::Summary => summary_page_content(ctx, features)?,
            None => profile_page_content(ctx, profiles, clusterings, features)?,
            Some(d) => {
                let clustering = clusterings.get(&d).ok_or(Error::MissingDimension(d))?;
                behavior_page_content(ctx, d, view, clustering, features)?
            }
        };
        bundle.validate()?;
        out.push(bundle);
    }
    Ok(out)
}
