//! Template captions and alt texts for chart specs.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::chart::{ChartSpec, Series, ValueMode, XAxis};
use crate::ingest::WeekRange;

/// Relative band inside which a change counts as flat.
pub const FLAT_BAND: f64 = 0.01;

pub fn weeks_phrase(weeks: WeekRange) -> String {
    if weeks.from == weeks.to {
        format!("week {}", weeks.from)
    } else {
        format!("weeks {}\u{2013}{}", weeks.from, weeks.to)
    }
}

fn number(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        String::from("0")
    } else {
        String::from(s)
    }
}

fn direction(first: f64, last: f64) -> &'static str {
    let delta = last - first;
    if delta == 0.0 || libm::fabs(delta) < FLAT_BAND * libm::fabs(first) {
        "stays flat"
    } else if delta > 0.0 {
        "trends up"
    } else {
        "trends down"
    }
}

fn describe_series(series: &Series, x_axis: XAxis, unit: &str) -> String {
    if series.y.is_empty() || series.is_empty() {
        return format!("{}: no activity recorded.", series.name);
    }
    let mut min = 0;
    let mut max = 0;
    for (i, v) in series.y.iter().enumerate() {
        if *v < series.y[min] {
            min = i;
        }
        if *v > series.y[max] {
            max = i;
        }
    }
    let mut text = format!(
        "{}: maximum {}{unit} at {}, minimum {}{unit} at {}",
        series.name,
        number(series.y[max]),
        x_axis.point(&series.x[max]),
        number(series.y[min]),
        x_axis.point(&series.x[min]),
    );
    if x_axis == XAxis::Week && series.y.len() > 1 {
        text.push_str(", ");
        text.push_str(direction(series.y[0], series.y[series.y.len() - 1]));
        text.push_str(" over the period");
    }
    text.push('.');
    text
}

/// Caption and alt text for `spec` covering `weeks`. Both are pure
/// functions of their inputs.
pub fn caption_and_alttext(spec: &ChartSpec, weeks: WeekRange) -> (String, String) {
    let period = weeks_phrase(weeks);
    let caption = if spec.is_empty() {
        format!("{}, {period}: no activity recorded.", spec.title)
    } else {
        let mut caption = format!("{}, {period}.", spec.title);
        if spec.value_mode == ValueMode::PercentageWithTotal {
            if let Some(total) = spec.total {
                caption.push_str(&format!(" Values are percentages of all {total} students."));
            }
        }
        caption
    };

    let unit = if spec.value_mode == ValueMode::PercentageWithTotal { "%" } else { "" };
    let names: Vec<&str> = spec.series.iter().map(|s| s.name.as_str()).collect();
    let mut alt = format!(
        "{} of {} for {period}. X-axis: {}. Y-axis: {}.",
        spec.chart_type.describe(),
        spec.title,
        if spec.x_label.is_empty() { "categories" } else { spec.x_label.as_str() },
        spec.y_label,
    );
    if spec.is_empty() {
        alt.push_str(" No activity recorded.");
    }
    match names.len() {
        0 => {}
        1 => alt.push_str(&format!(" One series: {}.", names[0])),
        n => alt.push_str(&format!(" {n} series: {}.", names.join(", "))),
    }
    for series in &spec.series {
        alt.push(' ');
        alt.push_str(&describe_series(series, spec.x_axis, unit));
    }
    (caption, alt)
}
