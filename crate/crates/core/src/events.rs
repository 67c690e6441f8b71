//! Canonical bug-tracker event model and ingestion.
//!
//! Events arrive as line-delimited records, either JSONL objects with keys
//! `kind` ("report" | "comment"), `bug`, `author`, `ts` (ISO-8601 UTC), or
//! CSV with the header `kind,bug,author,ts`. Timestamps are normalized to
//! UTC at parse time and truncated to second precision; day boundaries are
//! UTC midnights. Malformed records are collected as rejects with their line
//! number instead of aborting the parse.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, BufReader, Read};

use chrono::{DateTime, NaiveDate, SecondsFormat, Timelike, Utc};
use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    Report,
    Comment,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Report => "report",
            EventKind::Comment => "comment",
        }
    }
}

/// One report or comment. `ordinal` is the event's position within its bug:
/// 0 for the report, 1.. for comments in (timestamp, input order).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BugEvent {
    pub kind: EventKind,
    pub bug_id: String,
    pub author_raw: String,
    pub ts: DateTime<Utc>,
    pub ordinal: u32,
}

impl BugEvent {
    /// UTC calendar day of the event; windowing is day-granular.
    pub fn day(&self) -> NaiveDate {
        self.ts.date_naive()
    }
}

/// Per-bug view into the log. `reporter_raw` survives even when the report
/// event itself falls outside a filtered date range, so window graphs can
/// still link late comments back to the reporter.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BugEntry {
    pub reporter_raw: Option<String>,
    pub report_pos: Option<usize>,
    pub comment_pos: Vec<usize>,
}

/// Immutable, time-ordered event log. Events are sorted by (timestamp,
/// input order) and the sort is stable, so identical input yields an
/// identical log.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EventLog {
    pub events: Vec<BugEvent>,
    pub index: BTreeMap<String, BugEntry>,
    /// Observed [first_day, last_day] of the event sequence, inclusive.
    pub date_range: Option<(NaiveDate, NaiveDate)>,
}

impl EventLog {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Bugs that have comments but no known reporter.
    pub fn orphan_bugs(&self) -> Vec<&str> {
        self.index
            .iter()
            .filter(|(_, e)| e.reporter_raw.is_none() && !e.comment_pos.is_empty())
            .map(|(b, _)| b.as_str())
            .collect()
    }

    /// Every distinct author string, in first-appearance order, including
    /// reporters retained only as index metadata.
    pub fn raw_authors(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for ev in &self.events {
            if seen.insert(ev.author_raw.as_str()) {
                out.push(ev.author_raw.as_str());
            }
        }
        for entry in self.index.values() {
            if let Some(r) = entry.reporter_raw.as_deref() {
                if seen.insert(r) {
                    out.push(r);
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventFormat {
    Jsonl,
    Csv,
}

#[derive(Clone, Debug)]
pub struct Reject {
    pub line: u64,
    pub reason: String,
}

/// Non-fatal findings from a parse: rejected records and dropped duplicates.
#[derive(Clone, Debug, Default)]
pub struct ParseReport {
    pub rejects: Vec<Reject>,
    pub duplicates_dropped: usize,
}

impl ParseReport {
    /// Render rejects as the `<input>.rejects` sidecar body.
    pub fn rejects_file_body(&self) -> String {
        let mut out = String::new();
        for r in &self.rejects {
            out.push_str(&format!("line {}: {}\n", r.line, r.reason));
        }
        out
    }
}

struct Candidate {
    kind: EventKind,
    bug_id: String,
    author_raw: String,
    ts: DateTime<Utc>,
    line: u64,
}

#[derive(Deserialize)]
struct RawJsonRecord {
    kind: Option<String>,
    bug: Option<String>,
    author: Option<String>,
    ts: Option<String>,
}

fn parse_kind(s: &str) -> Option<EventKind> {
    match s {
        "report" => Some(EventKind::Report),
        "comment" => Some(EventKind::Comment),
        _ => None,
    }
}

fn parse_ts(s: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .ok()
        .map(|dt| dt.with_timezone(&Utc).with_nanosecond(0).unwrap())
}

fn validate(
    kind: Option<&str>,
    bug: Option<&str>,
    author: Option<&str>,
    ts: Option<&str>,
    line: u64,
) -> std::result::Result<Candidate, Reject> {
    let reject = |reason: String| Reject { line, reason };
    let kind = match kind.filter(|s| !s.is_empty()) {
        Some(k) => parse_kind(k).ok_or_else(|| reject(format!("unknown kind {k:?}")))?,
        None => return Err(reject("missing kind".into())),
    };
    let bug = match bug.filter(|s| !s.is_empty()) {
        Some(b) => b.to_string(),
        None => return Err(reject("missing bug id".into())),
    };
    let author = match author.filter(|s| !s.trim().is_empty()) {
        Some(a) => a.to_string(),
        None => return Err(reject("missing author".into())),
    };
    let ts = match ts.filter(|s| !s.is_empty()) {
        Some(t) => parse_ts(t).ok_or_else(|| reject(format!("unparseable timestamp {t:?}")))?,
        None => return Err(reject("missing timestamp".into())),
    };
    Ok(Candidate {
        kind,
        bug_id: bug,
        author_raw: author,
        ts,
        line,
    })
}

/// Assemble a validated, ordered log from candidate records. Exact duplicate
/// records are dropped with a count; a second report for an already-reported
/// bug is rejected (the first, in time order, wins). `known_reporters` seeds
/// reporter metadata for bugs whose report event is not among the candidates.
fn assemble(
    mut candidates: Vec<Candidate>,
    known_reporters: &HashMap<String, String>,
    report: &mut ParseReport,
) -> EventLog {
    candidates.sort_by_key(|c| c.ts);

    let mut seen: HashSet<(EventKind, String, String, DateTime<Utc>)> = HashSet::new();
    let mut events: Vec<BugEvent> = Vec::with_capacity(candidates.len());
    let mut index: BTreeMap<String, BugEntry> = BTreeMap::new();
    let mut ordinals: HashMap<String, u32> = HashMap::new();

    for c in candidates {
        let key = (c.kind, c.bug_id.clone(), c.author_raw.clone(), c.ts);
        if !seen.insert(key) {
            report.duplicates_dropped += 1;
            continue;
        }
        let entry = index.entry(c.bug_id.clone()).or_insert_with(|| BugEntry {
            reporter_raw: known_reporters.get(&c.bug_id).cloned(),
            ..BugEntry::default()
        });
        let pos = events.len();
        match c.kind {
            EventKind::Report => {
                if entry.report_pos.is_some() {
                    report.rejects.push(Reject {
                        line: c.line,
                        reason: format!("second report for bug {:?}", c.bug_id),
                    });
                    continue;
                }
                entry.report_pos = Some(pos);
                entry.reporter_raw = Some(c.author_raw.clone());
                events.push(BugEvent {
                    kind: c.kind,
                    bug_id: c.bug_id,
                    author_raw: c.author_raw,
                    ts: c.ts,
                    ordinal: 0,
                });
            }
            EventKind::Comment => {
                let ord = ordinals.entry(c.bug_id.clone()).or_insert(0);
                *ord += 1;
                entry.comment_pos.push(pos);
                events.push(BugEvent {
                    kind: c.kind,
                    bug_id: c.bug_id,
                    author_raw: c.author_raw,
                    ts: c.ts,
                    ordinal: *ord,
                });
            }
        }
    }

    let date_range = match (events.first(), events.last()) {
        (Some(a), Some(b)) => Some((a.day(), b.day())),
        _ => None,
    };
    EventLog {
        events,
        index,
        date_range,
    }
}

/// Parse a canonical event stream. Well-formed records become the log;
/// malformed ones land in the report's rejects with their line number.
pub fn parse_events<R: Read>(reader: R, format: EventFormat) -> Result<(EventLog, ParseReport)> {
    let mut report = ParseReport::default();
    let mut candidates = Vec::new();

    match format {
        EventFormat::Jsonl => {
            let buf = BufReader::new(reader);
            for (i, line) in buf.lines().enumerate() {
                let line_no = i as u64 + 1;
                let line = line.map_err(|e| Error::Format(format!("events: line {line_no}: {e}")))?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<RawJsonRecord>(&line) {
                    Ok(rec) => match validate(
                        rec.kind.as_deref(),
                        rec.bug.as_deref(),
                        rec.author.as_deref(),
                        rec.ts.as_deref(),
                        line_no,
                    ) {
                        Ok(c) => candidates.push(c),
                        Err(r) => report.rejects.push(r),
                    },
                    Err(e) => report.rejects.push(Reject {
                        line: line_no,
                        reason: format!("invalid json: {e}"),
                    }),
                }
            }
        }
        EventFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(true)
                .flexible(true)
                .from_reader(reader);
            let headers = rdr
                .headers()
                .map_err(|e| Error::Format(format!("events: unreadable csv header: {e}")))?
                .clone();
            let expect = ["kind", "bug", "author", "ts"];
            if headers.iter().collect::<Vec<_>>() != expect {
                return Err(Error::Format(format!(
                    "events: csv header must be {:?}, got {:?}",
                    expect.join(","),
                    headers.iter().collect::<Vec<_>>().join(",")
                )));
            }
            for rec in rdr.records() {
                let rec = rec.map_err(|e| Error::Format(format!("events: {e}")))?;
                let line_no = rec.position().map(|p| p.line()).unwrap_or(0);
                if rec.len() != 4 {
                    report.rejects.push(Reject {
                        line: line_no,
                        reason: format!("expected 4 fields, got {}", rec.len()),
                    });
                    continue;
                }
                match validate(rec.get(0), rec.get(1), rec.get(2), rec.get(3), line_no) {
                    Ok(c) => candidates.push(c),
                    Err(r) => report.rejects.push(r),
                }
            }
        }
    }

    let log = assemble(candidates, &HashMap::new(), &mut report);
    Ok((log, report))
}

/// Restrict the log to events whose UTC day lies in [first_day, last_day].
/// A report outside the range whose comments are inside is kept in the index
/// as reporter metadata but excluded from the event sequence.
pub fn filter_date_range(log: &EventLog, first_day: NaiveDate, last_day: NaiveDate) -> Result<EventLog> {
    if first_day > last_day {
        return Err(Error::Argument(format!(
            "events: inverted date range {first_day}..{last_day}"
        )));
    }
    let known: HashMap<String, String> = log
        .index
        .iter()
        .filter_map(|(b, e)| e.reporter_raw.clone().map(|r| (b.clone(), r)))
        .collect();
    let candidates = log
        .events
        .iter()
        .filter(|ev| {
            let d = ev.day();
            d >= first_day && d <= last_day
        })
        .map(|ev| Candidate {
            kind: ev.kind,
            bug_id: ev.bug_id.clone(),
            author_raw: ev.author_raw.clone(),
            ts: ev.ts,
            line: 0,
        })
        .collect();
    let mut report = ParseReport::default();
    let filtered = assemble(candidates, &known, &mut report);
    debug_assert!(report.rejects.is_empty() && report.duplicates_dropped == 0);
    Ok(filtered)
}

/// Canonical JSONL serialization; parse(serialize(log)) reproduces the log.
pub fn serialize_jsonl(log: &EventLog) -> String {
    let mut out = String::new();
    for ev in &log.events {
        let rec = serde_json::json!({
            "kind": ev.kind.as_str(),
            "bug": ev.bug_id,
            "author": ev.author_raw,
            "ts": ev.ts.to_rfc3339_opts(SecondsFormat::Secs, true),
        });
        out.push_str(&rec.to_string());
        out.push('\n');
    }
    out
}

/// Canonical CSV serialization with the `kind,bug,author,ts` header.
pub fn serialize_csv(log: &EventLog) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "bug", "author", "ts"]).unwrap();
    for ev in &log.events {
        w.write_record([
            ev.kind.as_str(),
            &ev.bug_id,
            &ev.author_raw,
            &ev.ts.to_rfc3339_opts(SecondsFormat::Secs, true),
        ])
        .unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}
