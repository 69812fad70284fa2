//! Text formats read and written by the pipeline: the tab-separated event
//! log, the schedule, grades and ground-truth files, and the feature and
//! cluster exports.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Timelike, Utc};
use serde::{Deserialize, Serialize};

use srl_dash_core::features::{Dimension, Feature, FeatureMatrixSet};
use srl_dash_core::ingest::{sort_events, Calendar, ClickEvent, CourseSchedule, EventType, GradeBook};
use srl_dash_core::insights::RunMetadata;
use srl_dash_core::pipeline::RangeOutput;
use srl_dash_core::{StudentId, Timestamp};

use crate::error::{Result, ServiceError};

pub const EVENT_FIELDS: [&str; 5] = ["student_id", "timestamp", "event_type", "object_id", "value"];
pub const SCHEDULE_FIELDS: [&str; 3] = ["video_id", "week_index", "session_start"];
pub const GRADE_FIELDS: [&str; 2] = ["student_id", "grade"];
pub const TRUTH_FIELDS: [&str; 2] = ["student_id", "archetype_id"];

/// Label columns of the cluster export, in file order.
pub const CLUSTER_COLUMNS: [Dimension; 5] = [
    Dimension::Effort,
    Dimension::Consistency,
    Dimension::Regularity,
    Dimension::Control,
    Dimension::Proactivity,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LineIssue {
    MalformedLine { line: u64, reason: String },
    UnknownEventType { line: u64, value: String },
}

impl LineIssue {
    pub fn line(&self) -> u64 {
        match self {
            LineIssue::MalformedLine { line, .. } | LineIssue::UnknownEventType { line, .. } => *line,
        }
    }
}

/// Outcome of reading an event log.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    /// Non-empty data lines, header excluded.
    pub lines: usize,
    pub accepted: usize,
    pub issues: Vec<LineIssue>,
}

impl IngestReport {
    pub fn malformed_share(&self) -> f64 {
        if self.lines == 0 {
            0.0
        } else {
            self.issues.len() as f64 / self.lines as f64
        }
    }
}

pub fn format_timestamp(ts: Timestamp) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn parse_timestamp(s: &str) -> std::result::Result<Timestamp, String> {
    let ts = DateTime::parse_from_rfc3339(s.trim()).map_err(|e| format!("bad timestamp {s:?}: {e}"))?;
    let ts = ts.with_timezone(&Utc);
    Ok(ts.with_nanosecond(0).unwrap_or(ts))
}

fn parse_event_line(line_no: u64, line: &str) -> std::result::Result<ClickEvent, LineIssue> {
    let malformed = |reason: String| LineIssue::MalformedLine { line: line_no, reason };
    let fields: Vec<&str> = line.split('\t').collect();
    if !(3..=5).contains(&fields.len()) {
        return Err(malformed(format!("expected 5 tab-separated fields, found {}", fields.len())));
    }
    let timestamp = parse_timestamp(fields[1]).map_err(malformed)?;
    let event_type: EventType = fields[2].parse().map_err(|_| LineIssue::UnknownEventType {
        line: line_no,
        value: fields[2].to_string(),
    })?;
    let mut event = ClickEvent::new(fields[0], timestamp, event_type);
    if let Some(object) = fields.get(3).filter(|s| !s.is_empty()) {
        event = event.with_object(*object);
    }
    if let Some(raw) = fields.get(4).filter(|s| !s.is_empty()) {
        let v: f64 = raw.parse().map_err(|_| malformed(format!("bad value {raw:?}")))?;
        event = event.with_value(v);
    }
    event.validate().map_err(|e| malformed(e.to_string()))?;
    Ok(event)
}

/// Reads an event log. Malformed lines are collected in the report; the read
/// fails when their share reaches `tolerance`. Events come back sorted by
/// student, then time.
pub fn parse_events<R: Read>(reader: R, tolerance: f64) -> Result<(Vec<ClickEvent>, IngestReport)> {
    let mut events = Vec::new();
    let mut report = IngestReport::default();
    let mut seen_data = false;
    for (i, chunk) in BufReader::new(reader).split(b'\n').enumerate() {
        let chunk = chunk.map_err(|e| ServiceError::io("<events>", e))?;
        let line_no = i as u64 + 1;
        let Ok(text) = std::str::from_utf8(&chunk) else {
            report.lines += 1;
            report.issues.push(LineIssue::MalformedLine {
                line: line_no,
                reason: "not valid UTF-8".into(),
            });
            continue;
        };
        let text = text.strip_suffix('\r').unwrap_or(text);
        if text.trim().is_empty() {
            continue;
        }
        if !seen_data {
            seen_data = true;
            if text.split('\t').map(str::trim).eq(EVENT_FIELDS) {
                continue;
            }
        }
        report.lines += 1;
        match parse_event_line(line_no, text) {
            Ok(e) => events.push(e),
            Err(issue) => report.issues.push(issue),
        }
    }
    report.accepted = events.len();
    if !report.issues.is_empty() && report.malformed_share() >= tolerance {
        return Err(ServiceError::TooManyMalformed {
            report: Box::new(report),
            tolerance,
        });
    }
    sort_events(&mut events);
    Ok((events, report))
}

pub fn write_events<W: Write>(mut w: W, events: &[ClickEvent]) -> std::io::Result<()> {
    writeln!(w, "{}", EVENT_FIELDS.join("\t"))?;
    for e in events {
        let value = e.value.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            e.student_id,
            format_timestamp(e.timestamp),
            e.event_type,
            e.object_id.as_deref().unwrap_or(""),
            value
        )?;
    }
    w.flush()
}

fn csv_reader<R: Read>(reader: R, path: &str, expected: &[&str]) -> Result<csv::Reader<R>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse_err(path, 1, e.to_string()))?;
    if !headers.iter().eq(expected.iter().copied()) {
        return Err(parse_err(
            path,
            1,
            format!("expected header {:?}, found {:?}", expected.join(","), headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(rdr)
}

fn parse_err(path: &str, line: u64, reason: impl Into<String>) -> ServiceError {
    ServiceError::Parse {
        path: path.into(),
        line,
        reason: reason.into(),
    }
}

fn records<R: Read>(rdr: &mut csv::Reader<R>, path: &str) -> Result<Vec<(u64, csv::StringRecord)>> {
    rdr.records()
        .map(|r| {
            let r = r.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_err(path, line, e.to_string())
            })?;
            let line = r.position().map_or(0, |p| p.line());
            Ok((line, r))
        })
        .collect()
}

/// Reads `video_id,week_index,session_start` rows against `calendar`.
pub fn parse_schedule<R: Read>(reader: R, calendar: Calendar, path: &str) -> Result<CourseSchedule> {
    let mut rdr = csv_reader(reader, path, &SCHEDULE_FIELDS)?;
    let mut rows = Vec::new();
    for (line, r) in records(&mut rdr, path)? {
        let week: i64 = r[1]
            .parse()
            .map_err(|_| parse_err(path, line, format!("bad week_index {:?}", &r[1])))?;
        let start = parse_timestamp(&r[2]).map_err(|e| parse_err(path, line, e))?;
        if r[0].is_empty() {
            return Err(parse_err(path, line, "empty video_id"));
        }
        rows.push((r[0].to_string(), week, start));
    }
    Ok(CourseSchedule::new(calendar, rows)?)
}

pub fn write_schedule<W: Write>(w: W, schedule: &CourseSchedule) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    write_row(&mut out, SCHEDULE_FIELDS)?;
    for e in schedule.entries() {
        write_row(
            &mut out,
            [e.video_id.clone(), e.week_index.to_string(), format_timestamp(e.session_start)],
        )?;
    }
    flush(out)
}

pub fn parse_grades<R: Read>(reader: R, path: &str) -> Result<GradeBook> {
    let mut rdr = csv_reader(reader, path, &GRADE_FIELDS)?;
    let mut grades = GradeBook::new();
    for (line, r) in records(&mut rdr, path)? {
        let grade: f64 = r[1]
            .parse()
            .map_err(|_| parse_err(path, line, format!("bad grade {:?}", &r[1])))?;
        if grades.get(&r[0]).is_some() {
            return Err(parse_err(path, line, format!("duplicate student {:?}", &r[0])));
        }
        grades.insert(&r[0], grade).map_err(|e| parse_err(path, line, e.to_string()))?;
    }
    Ok(grades)
}

pub fn write_grades<W: Write>(w: W, grades: &GradeBook) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    write_row(&mut out, GRADE_FIELDS)?;
    for (s, g) in grades.iter() {
        write_row(&mut out, [s.clone(), g.to_string()])?;
    }
    flush(out)
}

pub fn parse_truth<R: Read>(reader: R, path: &str) -> Result<BTreeMap<StudentId, usize>> {
    let mut rdr = csv_reader(reader, path, &TRUTH_FIELDS)?;
    let mut truth = BTreeMap::new();
    for (line, r) in records(&mut rdr, path)? {
        let id: usize = r[1]
            .parse()
            .map_err(|_| parse_err(path, line, format!("bad archetype_id {:?}", &r[1])))?;
        truth.insert(r[0].to_string(), id);
    }
    Ok(truth)
}

pub fn write_truth<W: Write>(w: W, truth: &BTreeMap<StudentId, usize>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    write_row(&mut out, TRUTH_FIELDS)?;
    for (s, a) in truth {
        write_row(&mut out, [s.clone(), a.to_string()])?;
    }
    flush(out)
}

/// Wide table `student_id,dimension,feature,w<from>..w<to>`.
pub fn write_features<W: Write>(w: W, features: &FeatureMatrixSet) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let header = ["student_id", "dimension", "feature"]
        .into_iter()
        .map(String::from)
        .chain(features.weeks.weeks().map(|w| format!("w{w}")));
    write_row(&mut out, header)?;
    for student in &features.roster {
        for f in Feature::ALL {
            let values = features.values(f, student).unwrap_or_default();
            let row = [student.clone(), f.dimension().to_string(), f.name().to_string()]
                .into_iter()
                .chain(values.iter().map(|v| v.to_string()));
            write_row(&mut out, row)?;
        }
    }
    flush(out)
}

/// One row of the cluster export.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterRow {
    pub student_id: StudentId,
    pub labels: BTreeMap<Dimension, usize>,
    pub profile_id: usize,
}

/// Cluster labels per student, preceded by `# key=value` run metadata lines.
pub fn write_clusters<W: Write>(mut w: W, output: &RangeOutput, run: &RunMetadata) -> Result<()> {
    let mut meta = vec![
        ("run_id", run.run_id.clone()),
        ("weeks", output.weeks.to_string()),
        ("seed", run.seed.to_string()),
    ];
    for d in CLUSTER_COLUMNS {
        meta.push((d.as_str(), output.clusterings.get(&d).map_or(0, |c| c.k).to_string()));
    }
    meta.push(("k_profiles", output.profiles.len().to_string()));
    meta.push(("normalize", run.normalize.to_string()));
    for (key, value) in meta {
        let key = if CLUSTER_COLUMNS.iter().any(|d| d.as_str() == key) {
            format!("k_{key}")
        } else {
            key.to_string()
        };
        writeln!(w, "# {key}={value}").map_err(|e| ServiceError::io("<clusters>", e))?;
    }
    let mut out = csv::Writer::from_writer(w);
    let header = ["student_id".to_string()]
        .into_iter()
        .chain(CLUSTER_COLUMNS.iter().map(|d| format!("{}_label", d.as_str())))
        .chain(["profile_id".to_string()]);
    write_row(&mut out, header)?;
    let profiles = output.profile_labels();
    for (student, profile) in output.features.roster.iter().zip(profiles) {
        let row = [student.clone()]
            .into_iter()
            .chain(CLUSTER_COLUMNS.iter().map(|d| {
                output.clusterings[d]
                    .label(student)
                    .map_or_else(String::new, |l| l.to_string())
            }))
            .chain([profile.to_string()]);
        write_row(&mut out, row)?;
    }
    flush(out)
}

/// Reads a cluster export back into its metadata and rows.
pub fn parse_clusters<R: Read>(reader: R, path: &str) -> Result<(BTreeMap<String, String>, Vec<ClusterRow>)> {
    let mut text = String::new();
    BufReader::new(reader)
        .read_to_string(&mut text)
        .map_err(|e| ServiceError::io(path, e))?;
    let mut meta = BTreeMap::new();
    for line in text.lines().filter_map(|l| l.strip_prefix('#')) {
        if let Some((k, v)) = line.trim().split_once('=') {
            meta.insert(k.to_string(), v.to_string());
        }
    }
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (line, r) in records(&mut rdr, path)? {
        let num = |i: usize| -> Result<usize> {
            r[i].parse()
                .map_err(|_| parse_err(path, line, format!("bad label {:?}", &r[i])))
        };
        let mut labels = BTreeMap::new();
        for (i, d) in CLUSTER_COLUMNS.iter().enumerate() {
            labels.insert(*d, num(i + 1)?);
        }
        rows.push(ClusterRow {
            student_id: r[0].to_string(),
            labels,
            profile_id: num(6)?,
        });
    }
    Ok((meta, rows))
}

fn write_row<W: Write, I, T>(out: &mut csv::Writer<W>, row: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    out.write_record(row)
        .map_err(|e| ServiceError::io("<csv>", std::io::Error::other(e)))
}

fn flush<W: Write>(mut out: csv::Writer<W>) -> Result<()> {
    out.flush().map_err(|e| ServiceError::io("<csv>", e))
}

pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| ServiceError::io(path, e))
}

pub fn create(path: &Path) -> Result<std::io::BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| ServiceError::io(dir, e))?;
    }
    File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| ServiceError::io(path, e))
}

/// Lines of a text file as `(line_no, text)`, skipping blanks.
pub fn numbered_lines<R: Read>(reader: R) -> impl Iterator<Item = std::io::Result<(u64, String)>> {
    BufReader::new(reader)
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i as u64 + 1, l)))
        .filter(|r| r.as_ref().map_or(true, |(_, l)| !l.trim().is_empty()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn ts(d: u32, h: u32, m: u32) -> Timestamp {
        Utc.with_ymd_and_hms(2023, 3, d, h, m, 0).unwrap()
    }

    #[test]
    fn parses_the_documented_line() {
        let raw = "s1\t2023-03-01T14:05:00Z\tvideo_play\tv1\t\n";
        let (events, report) = parse_events(raw.as_bytes(), 0.01).unwrap();
        assert_eq!(report.lines, 1);
        assert!(report.issues.is_empty());
        assert_eq!(events, vec![ClickEvent::new("s1", ts(1, 14, 5), EventType::VideoPlay).with_object("v1")]);
    }

    #[test]
    fn header_and_blank_lines_are_skipped_and_output_sorted() {
        let raw = "student_id\ttimestamp\tevent_type\tobject_id\tvalue\n\
                   s2\t2023-03-01T10:00:00Z\tpage_view\t\t\n\
                   \n\
                   s1\t2023-03-01T12:00:00Z\tsession_ping\t\t\n\
                   s1\t2023-03-01T11:00:00+01:00\tvideo_speed_change\tv1\t1.5\n";
        let (events, report) = parse_events(raw.as_bytes(), 0.01).unwrap();
        assert_eq!(report.lines, 3);
        let keys: Vec<_> = events.iter().map(|e| (e.student_id.as_str(), e.timestamp)).collect();
        assert_eq!(keys, vec![("s1", ts(1, 10, 0)), ("s1", ts(1, 12, 0)), ("s2", ts(1, 10, 0))]);
        assert_eq!(events[0].value, Some(1.5));
    }

    #[test]
    fn speed_change_without_value_is_malformed() {
        let raw = "s1\t2023-03-01T14:05:00Z\tvideo_speed_change\tv1\t\n";
        let err = parse_events(raw.as_bytes(), 0.5).unwrap_err();
        let ServiceError::TooManyMalformed { report, .. } = err else {
            panic!("unexpected error {err:?}")
        };
        assert!(matches!(&report.issues[0], LineIssue::MalformedLine { line: 1, .. }));
    }

    #[test]
    fn unknown_event_type_reports_its_line() {
        let mut raw = String::new();
        for i in 0..200 {
            raw.push_str(&format!("s{i}\t2023-03-01T14:05:00Z\tpage_view\t\t\n"));
        }
        raw.push_str("sx\t2023-03-01T14:05:00Z\tteleport\t\t\n");
        let (events, report) = parse_events(raw.as_bytes(), 0.01).unwrap();
        assert_eq!(events.len(), 200);
        assert_eq!(
            report.issues,
            vec![LineIssue::UnknownEventType {
                line: 201,
                value: "teleport".into()
            }]
        );
    }

    #[test]
    fn tolerance_boundary_aborts_at_exactly_the_share() {
        let mut raw = String::new();
        for i in 0..99 {
            raw.push_str(&format!("s{i}\t2023-03-01T14:05:00Z\tpage_view\t\t\n"));
        }
        raw.push_str("broken line\n");
        assert!(matches!(
            parse_events(raw.as_bytes(), 0.01),
            Err(ServiceError::TooManyMalformed { .. })
        ));
        assert_eq!(parse_events(raw.as_bytes(), 0.011).unwrap().1.issues.len(), 1);
    }

    #[test]
    fn events_round_trip() {
        let events = vec![
            ClickEvent::new("a", ts(2, 9, 0), EventType::VideoSeek).with_object("v2"),
            ClickEvent::new("a", ts(2, 9, 1), EventType::VideoSpeedChange)
                .with_object("v2")
                .with_value(1.25),
            ClickEvent::new("b", ts(2, 9, 0), EventType::SessionPing),
        ];
        let mut buf = Vec::new();
        write_events(&mut buf, &events).unwrap();
        assert_eq!(parse_events(buf.as_slice(), 0.0).unwrap().0, events);
    }

    fn calendar() -> Calendar {
        Calendar {
            week_zero: Utc.with_ymd_and_hms(2023, 2, 20, 0, 0, 0).unwrap(),
            weeks: 2,
        }
    }

    #[test]
    fn schedule_round_trip_and_errors() {
        let raw = "video_id,week_index,session_start\nv1,1,2023-02-22T10:00:00Z\nv2,2,2023-03-01T10:00:00Z\n";
        let s = parse_schedule(raw.as_bytes(), calendar(), "schedule.csv").unwrap();
        assert_eq!(s.len(), 2);
        let mut buf = Vec::new();
        write_schedule(&mut buf, &s).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), raw);

        let out = "video_id,week_index,session_start\nv9,3,2023-03-08T10:00:00Z\n";
        assert!(matches!(
            parse_schedule(out.as_bytes(), calendar(), "s"),
            Err(ServiceError::Core(srl_dash_core::Error::ScheduleOutOfRange { .. }))
        ));
        let dup = "video_id,week_index,session_start\nv1,1,2023-02-22T10:00:00Z\nv1,1,2023-02-22T10:00:00Z\n";
        assert!(matches!(
            parse_schedule(dup.as_bytes(), calendar(), "s"),
            Err(ServiceError::Core(srl_dash_core::Error::DuplicateVideoId(_)))
        ));
        assert!(matches!(
            parse_schedule("v1,1,2023-02-22T10:00:00Z\n".as_bytes(), calendar(), "s"),
            Err(ServiceError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn grades_round_trip_and_reject_duplicates() {
        let raw = "student_id,grade\ns1,4.5\ns2,3\n";
        let g = parse_grades(raw.as_bytes(), "g").unwrap();
        assert_eq!(g.get("s2"), Some(3.0));
        let mut buf = Vec::new();
        write_grades(&mut buf, &g).unwrap();
        assert_eq!(parse_grades(buf.as_slice(), "g").unwrap(), g);
        let dup = "student_id,grade\ns1,4\ns1,5\n";
        assert!(matches!(parse_grades(dup.as_bytes(), "g"), Err(ServiceError::Parse { line: 3, .. })));
    }

    #[test]
    fn truth_round_trip() {
        let truth: BTreeMap<StudentId, usize> = [("s001".to_string(), 0), ("s002".to_string(), 3)].into();
        let mut buf = Vec::new();
        write_truth(&mut buf, &truth).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("student_id,archetype_id\n"));
        assert_eq!(parse_truth(buf.as_slice(), "t").unwrap(), truth);
    }
}
