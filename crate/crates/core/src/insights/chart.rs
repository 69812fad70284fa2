//! Chart specifications and the global chart defaults.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Colorblind-safe palette used for every chart.
pub const PALETTE_ID: &str = "okabe-ito";

pub const OKABE_ITO: [&str; 8] = [
    "#E69F00", "#56B4E9", "#009E73", "#F0E442", "#0072B2", "#D55E00", "#CC79A7", "#000000",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    TimeSeries,
    Frequency,
    CategoricalProportion,
    CategoricalTimeSeries,
    CompositionOverTime,
    GroupComparisonTimeSeries,
}

impl DataKind {
    pub const ALL: [DataKind; 6] = [
        DataKind::TimeSeries,
        DataKind::Frequency,
        DataKind::CategoricalProportion,
        DataKind::CategoricalTimeSeries,
        DataKind::CompositionOverTime,
        DataKind::GroupComparisonTimeSeries,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartType {
    Bar,
    BarWithLine,
    Line,
    LineSd,
    StackedArea,
    Pie,
    StackedBar,
    GroupedBarSuperposed,
}

impl ChartType {
    pub fn describe(self) -> &'static str {
        match self {
            ChartType::Bar => "Bar chart",
            ChartType::BarWithLine => "Bar chart with a line overlay",
            ChartType::Line => "Line chart",
            ChartType::LineSd => "Line chart with a standard deviation band",
            ChartType::StackedArea => "Stacked area chart",
            ChartType::Pie => "Pie chart",
            ChartType::StackedBar => "Stacked bar chart",
            ChartType::GroupedBarSuperposed => "Grouped bar chart with bars side by side",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    Single,
    Stacked,
    SideBySide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueMode {
    PercentageWithTotal,
    Absolute,
}

/// Presentation defaults for one kind of data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartDefaults {
    pub chart_type: ChartType,
    pub layout: Layout,
    /// Show a legend whenever more than one series is drawn.
    pub legend_multi_series: bool,
    /// How counts of students are shown.
    pub student_counts: ValueMode,
    /// Add a complement series so stacked totals reach 100%.
    pub complement: bool,
}

pub fn default_chart_type(kind: DataKind) -> ChartDefaults {
    let (chart_type, layout, complement) = match kind {
        DataKind::TimeSeries => (ChartType::Bar, Layout::Single, false),
        DataKind::Frequency => (ChartType::Bar, Layout::Single, false),
        DataKind::CategoricalProportion => (ChartType::Pie, Layout::Single, false),
        DataKind::CategoricalTimeSeries => (ChartType::StackedArea, Layout::Stacked, false),
        DataKind::CompositionOverTime => (ChartType::StackedBar, Layout::Stacked, true),
        DataKind::GroupComparisonTimeSeries => {
            (ChartType::GroupedBarSuperposed, Layout::SideBySide, false)
        }
    };
    ChartDefaults {
        chart_type,
        layout,
        legend_multi_series: true,
        student_counts: ValueMode::PercentageWithTotal,
        complement,
    }
}

/// What the x values are; used when wording alt texts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XAxis {
    Week,
    Weekday,
    Hour,
    Category,
}

impl XAxis {
    pub fn point(self, x: &str) -> String {
        match self {
            XAxis::Week => format!("week {x}"),
            XAxis::Hour => format!("{x}:00"),
            XAxis::Weekday | XAxis::Category => String::from(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub x: Vec<String>,
    pub y: Vec<f64>,
}

impl Series {
    pub fn new(name: impl Into<String>, x: Vec<String>, y: Vec<f64>) -> Self {
        Series {
            name: name.into(),
            x,
            y,
        }
    }

    /// Series indexed by course weeks.
    pub fn weekly(name: impl Into<String>, weeks: impl IntoIterator<Item = u32>, y: Vec<f64>) -> Self {
        Series::new(name, weeks.into_iter().map(|w| format!("{w}")).collect(), y)
    }

    pub fn is_empty(&self) -> bool {
        self.y.iter().all(|v| *v == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub data_kind: DataKind,
    pub chart_type: ChartType,
    pub layout: Layout,
    pub title: String,
    pub x_axis: XAxis,
    pub x_label: String,
    pub y_label: String,
    pub value_mode: ValueMode,
    /// Roster size the percentages refer to.
    pub total: Option<u32>,
    pub legend: bool,
    pub palette_id: String,
    /// Name of the complement series, if one was added.
    pub complement: Option<String>,
    pub series: Vec<Series>,
}

impl ChartSpec {
    /// Empty chart carrying the defaults for `kind`.
    pub fn new(
        kind: DataKind,
        title: impl Into<String>,
        x_axis: XAxis,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
    ) -> Self {
        let defaults = default_chart_type(kind);
        ChartSpec {
            data_kind: kind,
            chart_type: defaults.chart_type,
            layout: defaults.layout,
            title: title.into(),
            x_axis,
            x_label: x_label.into(),
            y_label: y_label.into(),
            value_mode: ValueMode::Absolute,
            total: None,
            legend: false,
            palette_id: String::from(PALETTE_ID),
            complement: None,
            series: Vec::new(),
        }
    }

    pub fn with_series(mut self, series: Series) -> Self {
        self.series.push(series);
        self.legend = self.needs_legend();
        self
    }

    /// Converts student counts to percentages of `total` and puts the total
    /// in the y-axis label.
    pub fn student_percentages(mut self, total: u32) -> Self {
        let scale = if total == 0 { 0.0 } else { 100.0 / total as f64 };
        for s in &mut self.series {
            for v in &mut s.y {
                *v *= scale;
            }
        }
        self.value_mode = default_chart_type(self.data_kind).student_counts;
        self.total = Some(total);
        self.y_label = format!("{} (% of {total} students)", self.y_label);
        self
    }

    /// Appends a series holding whatever is missing to reach 100% at each x.
    pub fn with_complement(mut self, name: impl Into<String>) -> Self {
        let name = name.into();
        let Some(first) = self.series.first() else {
            return self;
        };
        let x = first.x.clone();
        let y = (0..x.len())
            .map(|i| {
                let covered: f64 = self.series.iter().map(|s| s.y[i]).sum();
                (100.0 - covered).max(0.0)
            })
            .collect();
        self.series.push(Series::new(name.clone(), x, y));
        self.complement = Some(name);
        self.legend = self.needs_legend();
        self
    }

    fn needs_legend(&self) -> bool {
        let defaults = default_chart_type(self.data_kind);
        let items = match self.chart_type {
            ChartType::Pie => self.series.first().map_or(0, |s| s.x.len()),
            _ => self.series.len(),
        };
        defaults.legend_multi_series && items > 1
    }

    pub fn is_empty(&self) -> bool {
        self.series.iter().all(Series::is_empty)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(format!("chart {:?}: {msg}", self.title)));
        for s in &self.series {
            if s.x.len() != s.y.len() {
                return bad(format!("series {} has {} x and {} y values", s.name, s.x.len(), s.y.len()));
            }
            if s.y.iter().any(|v| !v.is_finite()) {
                return bad(format!("series {} has non-finite values", s.name));
            }
        }
        if self.series.len() > 1 && !self.legend {
            return bad(String::from("multi-series chart without legend"));
        }
        if self.value_mode == ValueMode::PercentageWithTotal {
            let Some(total) = self.total else {
                return bad(String::from("percentage chart without total"));
            };
            if !self.y_label.contains(&format!("{total}")) {
                return bad(String::from("axis label lacks the roster total"));
            }
            let stacked = matches!(self.chart_type, ChartType::StackedBar | ChartType::Pie);
            if stacked {
                let len = self.series.first().map_or(0, |s| s.y.len());
                for i in 0..len {
                    let sum: f64 = self.series.iter().filter_map(|s| s.y.get(i)).sum();
                    if sum > 100.0 + 1e-6 {
                        return bad(format!("percentages sum to {sum} at position {i}"));
                    }
                }
            }
            if self.chart_type == ChartType::Pie {
                let sum: f64 = self.series.iter().flat_map(|s| s.y.iter()).sum();
                if sum > 100.0 + 1e-6 {
                    return bad(format!("pie slices sum to {sum}"));
                }
            }
        }
        if default_chart_type(self.data_kind).complement && !self.series.is_empty() {
            let Some(name) = &self.complement else {
                return bad(String::from("composition chart without complement series"));
            };
            if !self.series.iter().any(|s| &s.name == name) {
                return bad(format!("complement series {name} missing"));
            }
        }
        Ok(())
    }
}
