use std::io::Cursor;

use rankexp::log::{read_jsonl, validate_log, write_jsonl, IssueKind, LogError};
use rankexp::sim::{run_experiment, ExperimentConfig, RankerSpec};
use rankexp::{EventRecord, ExposureRecord, ListingId, Mode, SearchId};

fn small_run(mode: Mode) -> rankexp::sim::ExperimentRun {
    let cfg = ExperimentConfig::new("logs", mode, 5, 200, RankerSpec::noisy(1.0), RankerSpec::noisy(0.5));
    run_experiment(&cfg).unwrap()
}

#[test]
fn round_trip_preserves_records() {
    for mode in [Mode::Ab, Mode::Interleaving, Mode::Counterfactual] {
        let run = small_run(mode);
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &run.exposures).unwrap();
        let back: Vec<ExposureRecord> = read_jsonl(Cursor::new(&buf)).unwrap();
        assert_eq!(back, run.exposures);
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &run.events).unwrap();
        let back: Vec<EventRecord> = read_jsonl(Cursor::new(&buf)).unwrap();
        assert_eq!(back, run.events);
        assert!(validate_log(&run.exposures, &run.events).is_valid());
    }
}

#[test]
fn corrupted_line_is_reported_by_number() {
    let run = small_run(Mode::Interleaving);
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &run.events[..10]).unwrap();
    let mut lines: Vec<String> = String::from_utf8(buf).unwrap().lines().map(String::from).collect();
    let half = lines[6].len() / 2;
    lines[6].truncate(half);
    let text = lines.join("\n");
    match read_jsonl::<EventRecord, _>(Cursor::new(text)) {
        Err(LogError::Parse { line, .. }) => assert_eq!(line, 7),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn foreign_schema_version_is_rejected() {
    let run = small_run(Mode::Ab);
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &run.events[..3]).unwrap();
    let text = String::from_utf8(buf)
        .unwrap()
        .replacen("\"schema_version\":1", "\"schema_version\":9", 1);
    assert!(matches!(
        read_jsonl::<EventRecord, _>(Cursor::new(text)),
        Err(LogError::SchemaVersion { line: 1, found: 9 })
    ));
}

#[test]
fn validation_finds_each_structural_issue() {
    let run = small_run(Mode::Counterfactual);
    let mut exposures = run.exposures.clone();
    let mut events = run.events.clone();
    exposures.push(exposures[0].clone());
    events[0].search = SearchId(u64::MAX);
    events[1].listing = ListingId(u64::MAX);
    let other = exposures.iter().find(|e| e.user != events[2].user).unwrap().user;
    events[2].user = other;
    exposures[3].shown_ranker = None;
    let report = validate_log(&exposures, &events);
    assert!(!report.is_valid());
    for kind in [
        IssueKind::DuplicateSearch,
        IssueKind::UnknownSearch,
        IssueKind::ListingNotShown,
        IssueKind::UserMismatch,
        IssueKind::ModeInconsistency,
    ] {
        assert!(report.count(kind) >= 1, "{kind:?} not reported: {:?}", report.issues);
    }
    assert_eq!(report.n_exposures, exposures.len());
}
