//! Analytics over the dashboard's own navigation telemetry: dwell time per
//! screen and a first-order transition model between screens.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::insights::{PageId, View};
use crate::{Error, Result, Timestamp};

/// One navigable dashboard screen: a page in one of its views.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Screen {
    Summary,
    Profiles,
    Proactivity,
    ProactivityGroups,
    Effort,
    EffortGroups,
    Consistency,
    ConsistencyGroups,
    Control,
    ControlGroups,
    Regularity,
    RegularityGroups,
}

impl Screen {
    /// Menu order.
    pub const ALL: [Screen; 12] = [
        Screen::Summary,
        Screen::Profiles,
        Screen::Proactivity,
        Screen::ProactivityGroups,
        Screen::Effort,
        Screen::EffortGroups,
        Screen::Consistency,
        Screen::ConsistencyGroups,
        Screen::Control,
        Screen::ControlGroups,
        Screen::Regularity,
        Screen::RegularityGroups,
    ];

    pub fn new(page: PageId, view: View) -> Option<Screen> {
        Screen::ALL.into_iter().find(|s| s.page() == page && s.view() == view)
    }

    pub fn page(self) -> PageId {
        match self {
            Screen::Summary => PageId::Summary,
            Screen::Profiles => PageId::Profiles,
            Screen::Proactivity | Screen::ProactivityGroups => PageId::Proactivity,
            Screen::Effort | Screen::EffortGroups => PageId::Effort,
            Screen::Consistency | Screen::ConsistencyGroups => PageId::Consistency,
            Screen::Control | Screen::ControlGroups => PageId::Control,
            Screen::Regularity | Screen::RegularityGroups => PageId::Regularity,
        }
    }

    pub fn view(self) -> View {
        match self {
            Screen::ProactivityGroups
            | Screen::EffortGroups
            | Screen::ConsistencyGroups
            | Screen::ControlGroups
            | Screen::RegularityGroups => View::Groups,
            _ => View::Aggregated,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Screen::Summary => "summary",
            Screen::Profiles => "profiles",
            Screen::Proactivity => "proactivity",
            Screen::ProactivityGroups => "proactivity_groups",
            Screen::Effort => "effort",
            Screen::EffortGroups => "effort_groups",
            Screen::Consistency => "consistency",
            Screen::ConsistencyGroups => "consistency_groups",
            Screen::Control => "control",
            Screen::ControlGroups => "control_groups",
            Screen::Regularity => "regularity",
            Screen::RegularityGroups => "regularity_groups",
        }
    }
}

impl fmt::Display for Screen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Screen {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Screen::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown screen {s:?}")))
    }
}

/// One visit of a teacher session to a screen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageEvent {
    pub session_id: String,
    pub page: Screen,
    pub entered_at: Timestamp,
    pub left_at: Timestamp,
}

impl UsageEvent {
    pub fn validate(&self) -> Result<()> {
        if self.session_id.is_empty() {
            return Err(Error::InvalidEvent(String::from("empty session_id")));
        }
        if self.entered_at > self.left_at {
            return Err(Error::InvalidEvent(format!(
                "session {} left {} before entering",
                self.session_id, self.page
            )));
        }
        Ok(())
    }

    pub fn dwell_secs(&self) -> f64 {
        (self.left_at - self.entered_at).num_milliseconds() as f64 / 1000.0
    }

    /// Deduplication key.
    pub fn key(&self) -> (&str, Screen, Timestamp) {
        (&self.session_id, self.page, self.entered_at)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwellStat {
    pub mean_secs: f64,
    /// Population standard deviation.
    pub sd_secs: f64,
    pub visits: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DwellReport {
    pub pages: BTreeMap<Screen, DwellStat>,
}

pub fn dwell_times(events: &[UsageEvent]) -> DwellReport {
    let mut per: BTreeMap<Screen, Vec<f64>> = BTreeMap::new();
    for e in events {
        per.entry(e.page).or_default().push(e.dwell_secs());
    }
    let pages = per
        .into_iter()
        .map(|(page, v)| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            (
                page,
                DwellStat {
                    mean_secs: mean,
                    sd_secs: libm::sqrt(var),
                    visits: v.len() as u64,
                },
            )
        })
        .collect();
    DwellReport { pages }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub pages: Vec<Screen>,
    pub counts: Vec<Vec<u64>>,
    pub probabilities: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    pub fn p(&self, from: Screen, to: Screen) -> f64 {
        self.probabilities[from.index()][to.index()]
    }

    pub fn count(&self, from: Screen, to: Screen) -> u64 {
        self.counts[from.index()][to.index()]
    }
}

/// Splits events into per-session visit sequences ordered by entry time.
pub fn sessions(events: &[UsageEvent]) -> BTreeMap<&str, Vec<&UsageEvent>> {
    let mut by: BTreeMap<&str, Vec<&UsageEvent>> = BTreeMap::new();
    for e in events {
        by.entry(e.session_id.as_str()).or_default().push(e);
    }
    for visits in by.values_mut() {
        visits.sort_by_key(|v| (v.entered_at, v.left_at, v.page));
    }
    by
}

/// Counts consecutive screen pairs within each session. With
/// `self_loops == false`, repeated visits to the same screen are skipped.
pub fn transition_matrix(events: &[UsageEvent], self_loops: bool) -> TransitionMatrix {
    let n = Screen::ALL.len();
    let mut counts = vec![vec![0u64; n]; n];
    for visits in sessions(events).values() {
        for pair in visits.windows(2) {
            let (a, b) = (pair[0].page, pair[1].page);
            if a == b && !self_loops {
                continue;
            }
            counts[a.index()][b.index()] += 1;
        }
    }
    let probabilities = counts
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            row.iter()
                .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                .collect()
        })
        .collect();
    TransitionMatrix {
        pages: Screen::ALL.to_vec(),
        counts,
        probabilities,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: Screen,
    pub to: Screen,
    pub p: f64,
}

/// Edges with `p > min_p`, highest probability first, ties in page order.
pub fn filter_edges(m: &TransitionMatrix, min_p: f64) -> Vec<Edge> {
    let mut edges: Vec<Edge> = Vec::new();
    for (i, &from) in m.pages.iter().enumerate() {
        for (j, &to) in m.pages.iter().enumerate() {
            let p = m.probabilities[i][j];
            if p > min_p {
                edges.push(Edge { from, to, p });
            }
        }
    }
    edges.sort_by(|a, b| b.p.total_cmp(&a.p).then((a.from, a.to).cmp(&(b.from, b.to))));
    edges
}

/// Dwell statistics plus the filtered transition graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageReport {
    pub min_p: f64,
    pub self_loops: bool,
    pub sessions: usize,
    pub events: usize,
    pub dwell: DwellReport,
    pub edges: Vec<Edge>,
}

pub fn usage_report(events: &[UsageEvent], min_p: f64, self_loops: bool) -> Result<UsageReport> {
    if !(0.0..=1.0).contains(&min_p) {
        return Err(Error::InvalidParameter(format!("min_p {min_p} outside [0, 1]")));
    }
    let m = transition_matrix(events, self_loops);
    Ok(UsageReport {
        min_p,
        self_loops,
        sessions: sessions(events).len(),
        events: events.len(),
        dwell: dwell_times(events),
        edges: filter_edges(&m, min_p),
    })
}
