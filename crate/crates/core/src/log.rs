//! Line-delimited JSON logs and structural validation.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{EventRecord, ExposureRecord, SearchId, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unsupported schema_version {found} (expected {SCHEMA_VERSION})")]
    SchemaVersion { line: usize, found: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reads one JSON record per non-empty line. Line numbers in errors are 1-based.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>, LogError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| LogError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        match value.get("schema_version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(found) => return Err(LogError::SchemaVersion { line: i + 1, found }),
            None => {
                return Err(LogError::Parse {
                    line: i + 1,
                    message: "missing schema_version".into(),
                })
            }
        }
        out.push(serde_json::from_value(value).map_err(|e| LogError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize, W: Write>(mut writer: W, records: &[T]) -> Result<(), LogError> {
    for r in records {
        serde_json::to_writer(&mut writer, r).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    DuplicateSearch,
    UnknownSearch,
    ListingNotShown,
    UserMismatch,
    ModeInconsistency,
    DuplicateListing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub kind: IssueKind,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n_exposures: usize,
    pub n_events: usize,
    pub issues: Vec<Issue>,
    /// Bookings with no impression inside the attribution window; filled in by analysis.
    pub dropped_bookings: u64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn count(&self, kind: IssueKind) -> usize {
        self.issues.iter().filter(|i| i.kind == kind).count()
    }
}

/// Collects every structural problem in a log pair; never fails.
pub fn validate_log(exposures: &[ExposureRecord], events: &[EventRecord]) -> ValidationReport {
    let mut issues = Vec::new();
    let mut by_search: HashMap<SearchId, &ExposureRecord> = HashMap::new();
    for (i, e) in exposures.iter().enumerate() {
        if by_search.insert(e.search, e).is_some() {
            issues.push(Issue {
                kind: IssueKind::DuplicateSearch,
                detail: format!("exposure #{} repeats search {}", i + 1, e.search),
            });
        }
        if let Some(msg) = e.consistency_issue() {
            issues.push(Issue {
                kind: IssueKind::ModeInconsistency,
                detail: format!("search {}: {msg}", e.search),
            });
        }
        let mut lists: Vec<(&str, Vec<_>)> = vec![
            ("list_control", e.list_control.items.clone()),
            ("list_treatment", e.list_treatment.items.clone()),
        ];
        if let Some(il) = &e.interleaved {
            lists.push(("interleaved", il.listings().collect()));
        }
        for (name, items) in lists {
            if let Some(dup) = crate::types::first_duplicate(&items) {
                issues.push(Issue {
                    kind: IssueKind::DuplicateListing,
                    detail: format!("search {}: {name} repeats listing {dup}", e.search),
                });
            }
        }
    }
    for (i, ev) in events.iter().enumerate() {
        let Some(origin) = by_search.get(&ev.search) else {
            issues.push(Issue {
                kind: IssueKind::UnknownSearch,
                detail: format!("event #{} references unknown search {}", i + 1, ev.search),
            });
            continue;
        };
        if origin.user != ev.user {
            issues.push(Issue {
                kind: IssueKind::UserMismatch,
                detail: format!(
                    "event #{} by user {} on search {} shown to user {}",
                    i + 1,
                    ev.user,
                    ev.search,
                    origin.user
                ),
            });
        }
        if origin.shown_rank(ev.listing).is_none() {
            issues.push(Issue {
                kind: IssueKind::ListingNotShown,
                detail: format!(
                    "event #{} on listing {} absent from search {}",
                    i + 1,
                    ev.listing,
                    ev.search
                ),
            });
        }
    }
    ValidationReport {
        n_exposures: exposures.len(),
        n_events: events.len(),
        issues,
        dropped_bookings: 0,
    }
}
