use std::path::Path;
use std::process::{Command, Output};

use srl_dash::formats::{parse_clusters, parse_truth};
use srl_dash::store::ContentStore;
use srl_dash::usage_log::read_log;
use srl_dash_core::insights::{bundle_kinds, ContentBundle, PageId, View};
use srl_dash_core::usage::usage_report;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srl-dash"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = cli(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path) {
    ok(&[
        "synth", "--students", "30", "--weeks", "3", "--profiles", "5", "--seed", "9", "--usage-sessions", "35",
        "--out", dir.to_str().unwrap(),
    ]);
}

fn pipeline(dir: &Path, out: &Path, store: &Path) -> String {
    let p = |f: &str| dir.join(f).to_str().unwrap().to_string();
    ok(&[
        "pipeline", "run",
        "--events", &p("events.tsv"),
        "--schedule", &p("schedule.csv"),
        "--grades", &p("grades.csv"),
        "--config", &p("config.toml"),
        "--out", out.to_str().unwrap(),
        "--store", store.to_str().unwrap(),
        "--run-id", "r1",
        "--generated-at", "2024-06-01T00:00:00Z",
    ])
}

#[test]
fn synth_writes_ingest_formats_deterministically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    synth(a.path());
    synth(b.path());
    for f in ["events.tsv", "schedule.csv", "grades.csv", "truth.csv", "config.toml", "usage.jsonl"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert!(!x.is_empty(), "{f} empty");
        assert_eq!(x, std::fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
    let events = std::fs::read_to_string(a.path().join("events.tsv")).unwrap();
    assert!(events.starts_with("student_id\ttimestamp\tevent_type\tobject_id\tvalue\n"));
    let truth = parse_truth(std::fs::File::open(a.path().join("truth.csv")).unwrap(), "truth").unwrap();
    assert_eq!(truth.len(), 30);
    assert_eq!(truth.values().collect::<std::collections::BTreeSet<_>>().len(), 5);
}

#[test]
fn pipeline_run_exports_publishes_and_is_reproducible() {
    let data = tempfile::tempdir().unwrap();
    let out1 = tempfile::tempdir().unwrap();
    let out2 = tempfile::tempdir().unwrap();
    let store = tempfile::tempdir().unwrap();
    synth(data.path());

    let stdout = pipeline(data.path(), out1.path(), store.path());
    assert!(stdout.contains("published generation 1"), "{stdout}");
    let stdout = pipeline(data.path(), out2.path(), store.path());
    assert!(stdout.contains("published generation 2"), "{stdout}");

    let first = std::fs::read(out1.path().join("bundles.json")).unwrap();
    assert_eq!(first, std::fs::read(out2.path().join("bundles.json")).unwrap());
    let bundles: Vec<ContentBundle> = serde_json::from_slice(&first).unwrap();
    assert_eq!(bundles.len(), bundle_kinds().len());

    let (meta, rows) = parse_clusters(
        std::fs::File::open(out1.path().join("clusters-1-3.csv")).unwrap(),
        "clusters",
    )
    .unwrap();
    assert_eq!(rows.len(), 30);
    assert_eq!(meta["seed"], "9");
    assert_eq!(meta["k_effort"], "2");
    assert_eq!(meta["normalize"], "true");
    let features = std::fs::read_to_string(out1.path().join("features-1-3.csv")).unwrap();
    assert!(features.starts_with("student_id,dimension,feature,w1,w2,w3\n"));
    assert_eq!(features.lines().count(), 1 + 30 * 9);

    let store = ContentStore::open_dir(store.path()).unwrap();
    let (generation, raw) = store.get_content("synthetic", 1, 3, PageId::Profiles, View::Aggregated).unwrap();
    assert_eq!(generation, 2);
    let b: ContentBundle = serde_json::from_str(&raw).unwrap();
    assert_eq!(b.run.run_id, "r1");
}

#[test]
fn usage_report_prints_the_report_document() {
    let data = tempfile::tempdir().unwrap();
    synth(data.path());
    let log = data.path().join("usage.jsonl");
    let stdout = ok(&["usage-report", "--min-p", "0.12", "--log", log.to_str().unwrap()]);
    let expected = usage_report(&read_log(&log).unwrap(), 0.12, true).unwrap();
    assert_eq!(stdout, format!("{}\n", serde_json::to_string(&expected).unwrap()));

    let store_out = ok(&["usage-report", "--min-p", "0.12", "--store", data.path().to_str().unwrap()]);
    assert_eq!(store_out, stdout);
}

#[test]
fn malformed_event_log_aborts_the_run() {
    let data = tempfile::tempdir().unwrap();
    synth(data.path());
    let path = data.path().join("events.tsv");
    let mut text = std::fs::read_to_string(&path).unwrap();
    let lines = text.lines().count();
    for _ in 0..lines / 50 {
        text.push_str("s001\tyesterday\tvideo_play\tw1v1\t\n");
    }
    std::fs::write(&path, text).unwrap();
    let p = |f: &str| data.path().join(f).to_str().unwrap().to_string();
    let out = cli(&[
        "pipeline", "run",
        "--events", &p("events.tsv"),
        "--schedule", &p("schedule.csv"),
        "--grades", &p("grades.csv"),
        "--config", &p("config.toml"),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed"));
}

#[test]
fn invalid_arguments_fail() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!cli(&["synth", "--profiles", "9", "--out", dir.path().to_str().unwrap()]).status.success());
    assert!(!cli(&["synth", "--noise", "-1", "--out", dir.path().to_str().unwrap()]).status.success());
    assert!(!cli(&["usage-report"]).status.success());
}
