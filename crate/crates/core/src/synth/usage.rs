//! Dashboard navigation logs with exact planted transition ratios.
//!
//! Next screens are chosen by smooth weighted round-robin rather than by
//! sampling, so `w_ij / sum_j w_ij` is reproduced exactly whenever the number
//! of exits from `i` is a multiple of that sum. Dwell times come in
//! antithetic pairs around the target mean (an unpaired visit gets the mean
//! itself), so per-screen means are exact.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use chrono::TimeDelta;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::usage::{Screen, UsageEvent};
use crate::{Error, Result, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DwellSpec {
    pub mean_secs: u32,
    /// Maximum deviation from the mean; must not exceed it.
    pub spread_secs: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavigationSpec {
    pub start: Screen,
    /// Integer weights of the next screen. A screen without a row ends the
    /// session.
    pub transitions: BTreeMap<Screen, Vec<(Screen, u32)>>,
    pub dwell: BTreeMap<Screen, DwellSpec>,
    /// Safety cap on visits per session.
    pub max_steps: usize,
}

impl NavigationSpec {
    /// Menu-order walk with one in seven Effort exits going to Effort groups,
    /// Control groups always followed by Regularity, Profiles visits of 10
    /// minutes and Consistency groups visits of 2.3 minutes.
    pub fn reference() -> Self {
        use Screen::*;
        let chain = [
            (Summary, vec![(Profiles, 1)]),
            (Profiles, vec![(Proactivity, 1)]),
            (Proactivity, vec![(ProactivityGroups, 1)]),
            (ProactivityGroups, vec![(Effort, 1)]),
            (Effort, vec![(EffortGroups, 1), (Consistency, 6)]),
            (EffortGroups, vec![(Consistency, 1)]),
            (Consistency, vec![(ConsistencyGroups, 1)]),
            (ConsistencyGroups, vec![(Control, 1)]),
            (Control, vec![(ControlGroups, 1)]),
            (ControlGroups, vec![(Regularity, 1)]),
            (Regularity, vec![(RegularityGroups, 1)]),
        ];
        let dwell = [
            (Summary, 240, 60),
            (Profiles, 600, 240),
            (Proactivity, 300, 90),
            (ProactivityGroups, 180, 60),
            (Effort, 280, 90),
            (EffortGroups, 200, 60),
            (Consistency, 160, 50),
            (ConsistencyGroups, 138, 40),
            (Control, 220, 60),
            (ControlGroups, 170, 50),
            (Regularity, 210, 60),
            (RegularityGroups, 150, 40),
        ];
        NavigationSpec {
            start: Summary,
            transitions: chain.into_iter().collect(),
            dwell: dwell
                .into_iter()
                .map(|(s, mean_secs, spread_secs)| (s, DwellSpec { mean_secs, spread_secs }))
                .collect(),
            max_steps: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidSpec(msg));
        if self.max_steps == 0 {
            return fail("max_steps must be positive".into());
        }
        for (from, row) in &self.transitions {
            if row.iter().map(|(_, w)| u64::from(*w)).sum::<u64>() == 0 {
                return fail(format!("row {from} has zero total weight"));
            }
        }
        let mut needed = vec![self.start];
        needed.extend(self.transitions.values().flatten().map(|(s, _)| *s));
        for screen in needed {
            match self.dwell.get(&screen) {
                None => return fail(format!("no dwell time for {screen}")),
                Some(d) if d.spread_secs > d.mean_secs => {
                    return fail(format!("dwell spread of {screen} exceeds its mean"))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

/// Smooth weighted round-robin state per source screen.
struct RoundRobin {
    current: BTreeMap<Screen, Vec<i64>>,
}

impl RoundRobin {
    fn next(&mut self, from: Screen, row: &[(Screen, u32)]) -> Screen {
        let total: i64 = row.iter().map(|(_, w)| i64::from(*w)).sum();
        let current = self.current.entry(from).or_insert_with(|| vec![0; row.len()]);
        for (c, (_, w)) in current.iter_mut().zip(row) {
            *c += i64::from(*w);
        }
        let mut best = 0;
        for (i, c) in current.iter().enumerate() {
            if *c > current[best] {
                best = i;
            }
        }
        current[best] -= total;
        row[best].0
    }
}

/// `sessions` navigation sessions, one starting every hour from `start_at`.
pub fn generate_usage(
    spec: &NavigationSpec,
    sessions: usize,
    seed: u64,
    start_at: Timestamp,
) -> Result<Vec<UsageEvent>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rr = RoundRobin {
        current: BTreeMap::new(),
    };
    let paths: Vec<Vec<Screen>> = (0..sessions)
        .map(|_| {
            let mut path = vec![spec.start];
            while path.len() < spec.max_steps {
                let here = *path.last().unwrap();
                let Some(row) = spec.transitions.get(&here) else {
                    break;
                };
                path.push(rr.next(here, row));
            }
            path
        })
        .collect();

    let mut visits: BTreeMap<Screen, usize> = BTreeMap::new();
    for screen in paths.iter().flatten() {
        *visits.entry(*screen).or_default() += 1;
    }
    // Offsets +d, -d, +d', -d', ...; an unpaired last visit gets the mean.
    let mut offsets: BTreeMap<Screen, Vec<i64>> = BTreeMap::new();
    for (&screen, &n) in &visits {
        let spread = i64::from(spec.dwell[&screen].spread_secs);
        let mut v = Vec::with_capacity(n);
        while v.len() + 1 < n {
            let d = rng.random_range(0..=spread);
            v.push(d);
            v.push(-d);
        }
        if v.len() < n {
            v.push(0);
        }
        v.reverse();
        offsets.insert(screen, v);
    }

    let mut events = Vec::new();
    for (i, path) in paths.iter().enumerate() {
        let session_id = format!("nav-{seed:x}-{i:05}");
        let mut t = start_at + TimeDelta::hours(i as i64) + TimeDelta::seconds(rng.random_range(0..600));
        for &screen in path {
            let mean = i64::from(spec.dwell[&screen].mean_secs);
            let dwell = mean + offsets.get_mut(&screen).unwrap().pop().unwrap();
            let left = t + TimeDelta::seconds(dwell);
            events.push(UsageEvent {
                session_id: session_id.clone(),
                page: screen,
                entered_at: t,
                left_at: left,
            });
            t = left + TimeDelta::seconds(rng.random_range(1..=5));
        }
    }
    Ok(events)
}
