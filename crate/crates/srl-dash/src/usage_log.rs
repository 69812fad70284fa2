//! Append-only JSON-lines log of dashboard usage events, deduplicated on
//! `(session_id, page, entered_at)`.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use srl_dash_core::usage::{Screen, UsageEvent};
use srl_dash_core::Timestamp;

use crate::error::{Result, ServiceError};
use crate::formats::numbered_lines;

type Key = (String, Screen, Timestamp);

fn key_of(e: &UsageEvent) -> Key {
    (e.session_id.clone(), e.page, e.entered_at)
}

struct Inner {
    file: Option<File>,
    seen: HashSet<Key>,
    events: Vec<UsageEvent>,
}

pub struct UsageLog {
    path: Option<PathBuf>,
    inner: Mutex<Inner>,
}

impl UsageLog {
    pub fn in_memory() -> Self {
        UsageLog {
            path: None,
            inner: Mutex::new(Inner {
                file: None,
                seen: HashSet::new(),
                events: Vec::new(),
            }),
        }
    }

    /// Opens or creates the log, replaying what is already there.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let events = if path.exists() { read_log(&path)? } else { Vec::new() };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| ServiceError::io(dir, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| ServiceError::io(&path, e))?;
        let mut seen = HashSet::new();
        let events: Vec<_> = events.into_iter().filter(|e| seen.insert(key_of(e))).collect();
        Ok(UsageLog {
            path: Some(path),
            inner: Mutex::new(Inner {
                file: Some(file),
                seen,
                events,
            }),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Appends the events not yet recorded and returns how many were new.
    /// A batch containing any invalid event is rejected as a whole.
    pub fn record(&self, batch: &[UsageEvent]) -> Result<usize> {
        for e in batch {
            e.validate().map_err(|err| ServiceError::MalformedEvent(err.to_string()))?;
        }
        let mut inner = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        let mut fresh = Vec::new();
        let mut buf = String::new();
        for e in batch {
            let key = key_of(e);
            if inner.seen.contains(&key) || fresh.iter().any(|f: &UsageEvent| key_of(f) == key) {
                continue;
            }
            buf.push_str(&serde_json::to_string(e)?);
            buf.push('\n');
            fresh.push(e.clone());
        }
        if let Some(file) = inner.file.as_mut() {
            let path = self.path.as_deref().unwrap_or(Path::new("<usage>"));
            file.write_all(buf.as_bytes())
                .and_then(|_| file.sync_data())
                .map_err(|e| ServiceError::io(path, e))?;
        }
        let n = fresh.len();
        for e in fresh {
            inner.seen.insert(key_of(&e));
            inner.events.push(e);
        }
        Ok(n)
    }

    pub fn events(&self) -> Vec<UsageEvent> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner()).events.clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap_or_else(|e| e.into_inner()).events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Reads a JSON-lines usage log.
pub fn read_log(path: &Path) -> Result<Vec<UsageEvent>> {
    let file = File::open(path).map_err(|e| ServiceError::io(path, e))?;
    let mut out = Vec::new();
    for item in numbered_lines(file) {
        let (line, text) = item.map_err(|e| ServiceError::io(path, e))?;
        let event: UsageEvent = serde_json::from_str(&text).map_err(|e| ServiceError::Parse {
            path: path.display().to_string(),
            line,
            reason: e.to_string(),
        })?;
        out.push(event);
    }
    Ok(out)
}

pub fn write_log(path: &Path, events: &[UsageEvent]) -> Result<()> {
    let mut w = crate::formats::create(path)?;
    for e in events {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n").map_err(|err| ServiceError::io(path, err))?;
    }
    w.flush().map_err(|e| ServiceError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeDelta, TimeZone, Utc};

    fn ev(session: &str, page: Screen, start: i64, secs: i64) -> UsageEvent {
        let t0 = Utc.with_ymd_and_hms(2024, 5, 1, 9, 0, 0).unwrap() + TimeDelta::seconds(start);
        UsageEvent {
            session_id: session.into(),
            page,
            entered_at: t0,
            left_at: t0 + TimeDelta::seconds(secs),
        }
    }

    #[test]
    fn three_valid_events_then_duplicates() {
        let log = UsageLog::in_memory();
        let batch = [
            ev("a", Screen::Summary, 0, 10),
            ev("a", Screen::Effort, 10, 20),
            ev("a", Screen::EffortGroups, 30, 5),
        ];
        assert_eq!(log.record(&batch).unwrap(), 3);
        assert_eq!(log.record(&batch).unwrap(), 0);
        assert_eq!(log.len(), 3);
    }

    #[test]
    fn duplicates_inside_one_batch_count_once() {
        let log = UsageLog::in_memory();
        let e = ev("a", Screen::Summary, 0, 10);
        assert_eq!(log.record(&[e.clone(), e]).unwrap(), 1);
    }

    #[test]
    fn inverted_interval_rejects_whole_batch() {
        let log = UsageLog::in_memory();
        let mut bad = ev("a", Screen::Control, 100, 0);
        bad.left_at = bad.entered_at - TimeDelta::seconds(1);
        let err = log.record(&[ev("a", Screen::Summary, 0, 10), bad]).unwrap_err();
        assert!(matches!(err, ServiceError::MalformedEvent(_)));
        assert!(log.is_empty());
    }

    #[test]
    fn survives_reopen() {
        let dir = std::env::temp_dir().join(format!("usage-log-{}", std::process::id()));
        let path = dir.join("usage.jsonl");
        let _ = std::fs::remove_dir_all(&dir);
        {
            let log = UsageLog::open(&path).unwrap();
            log.record(&[ev("a", Screen::Summary, 0, 10), ev("b", Screen::Profiles, 0, 60)])
                .unwrap();
        }
        let log = UsageLog::open(&path).unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(log.record(&[ev("a", Screen::Summary, 0, 99)]).unwrap(), 0);
        assert_eq!(read_log(&path).unwrap().len(), 2);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
