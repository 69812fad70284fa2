//! Servable dashboard content: weekly summaries, profile descriptions and
//! chart specs with captions and alt texts.

pub mod chart;
pub mod content;
pub mod summary;
pub mod text;

pub use chart::{default_chart_type, ChartDefaults, ChartSpec, ChartType, DataKind, Layout, Series, ValueMode, XAxis};
pub use content::{
    behavior_page_content, build_all_content, bundle_kinds, profile_page_content, summary_page_content,
    ChartEntry, ContentBundle, ContentContext, GroupBlock, PageId, PageStats, ProfileBlock, RunMetadata, View,
    SCHEMA_VERSION,
};
pub use summary::{trend, weekly_summary, DimensionStat, Trend, WeeklySummary};
pub use text::caption_and_alttext;
