//! Overlapping sliding windows over the analysis date range.
//!
//! A window covers `window_days` consecutive UTC days and advances by
//! `slide_days`; the defaults (30 and 1) give adjacent windows a 29-day
//! overlap, so one comment influences 30 consecutive window graphs.
//! Window membership is by calendar day, not timestamp offset.

use chrono::{Days, NaiveDate};

use crate::error::{Error, Result};
use crate::events::{BugEvent, EventLog};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowSpec {
    pub index: usize,
    pub start_day: NaiveDate,
    pub length_days: u32,
    pub slide_days: u32,
}

impl WindowSpec {
    /// Last covered day, inclusive.
    pub fn end_day(&self) -> NaiveDate {
        self.start_day
            .checked_add_days(Days::new(self.length_days as u64 - 1))
            .expect("window end within calendar range")
    }

    pub fn contains(&self, day: NaiveDate) -> bool {
        day >= self.start_day && day <= self.end_day()
    }
}

/// Enumerate every window that lies fully inside [first_day, last_day].
/// With D inclusive days the count is floor((D - W) / s) + 1; a range
/// shorter than one window yields an empty sequence (callers warn).
pub fn enumerate_windows(
    first_day: NaiveDate,
    last_day: NaiveDate,
    window_days: u32,
    slide_days: u32,
) -> Result<Vec<WindowSpec>> {
    if window_days == 0 || slide_days == 0 {
        return Err(Error::Argument(
            "windows: window_days and slide_days must be >= 1".into(),
        ));
    }
    if first_day > last_day {
        return Err(Error::Argument(format!(
            "windows: inverted range {first_day}..{last_day}"
        )));
    }
    let total_days = (last_day - first_day).num_days() + 1;
    if total_days < window_days as i64 {
        return Ok(Vec::new());
    }
    let count = ((total_days - window_days as i64) / slide_days as i64) + 1;
    let mut out = Vec::with_capacity(count as usize);
    for index in 0..count as usize {
        let start_day = first_day
            .checked_add_days(Days::new(index as u64 * slide_days as u64))
            .ok_or_else(|| Error::Argument("windows: date overflow".into()))?;
        out.push(WindowSpec {
            index,
            start_day,
            length_days: window_days,
            slide_days,
        });
    }
    Ok(out)
}

/// One window's view of the log: the contiguous run of in-window events,
/// plus reporter identities for every touched bug regardless of report date.
#[derive(Clone, Copy)]
pub struct EventSlice<'a> {
    pub window: WindowSpec,
    log: &'a EventLog,
    lo: usize,
    hi: usize,
}

impl<'a> EventSlice<'a> {
    pub fn events(&self) -> &'a [BugEvent] {
        &self.log.events[self.lo..self.hi]
    }

    /// Reporter of a touched bug, if known — even when the report predates
    /// the window or the analysis range.
    pub fn reporter_raw(&self, bug_id: &str) -> Option<&'a str> {
        self.log.index.get(bug_id)?.reporter_raw.as_deref()
    }

    pub fn log(&self) -> &'a EventLog {
        self.log
    }

    pub fn contains_event(&self, ev: &BugEvent) -> bool {
        self.window.contains(ev.day())
    }
}

/// Locate one window's slice by bisecting the day-sorted event sequence.
pub fn events_in_window<'a>(log: &'a EventLog, window: WindowSpec) -> EventSlice<'a> {
    let start = window.start_day;
    let end = window.end_day();
    let lo = log.events.partition_point(|e| e.day() < start);
    let hi = log.events.partition_point(|e| e.day() <= end);
    EventSlice {
        window,
        log,
        lo: lo.min(hi),
        hi,
    }
}

/// Incremental slicer: advances two pointers over the day-sorted log, so
/// producing all slices costs time proportional to the per-window deltas
/// rather than a rescan per window.
pub struct WindowSlicer<'a> {
    log: &'a EventLog,
    windows: &'a [WindowSpec],
    next: usize,
    lo: usize,
    hi: usize,
}

impl<'a> WindowSlicer<'a> {
    pub fn new(log: &'a EventLog, windows: &'a [WindowSpec]) -> Self {
        Self {
            log,
            windows,
            next: 0,
            lo: 0,
            hi: 0,
        }
    }
}

impl<'a> Iterator for WindowSlicer<'a> {
    type Item = EventSlice<'a>;

    fn next(&mut self) -> Option<Self::Item> {
        let window = *self.windows.get(self.next)?;
        self.next += 1;
        let events = &self.log.events;
        let start = window.start_day;
        let end = window.end_day();
        while self.lo < events.len() && events[self.lo].day() < start {
            self.lo += 1;
        }
        if self.hi < self.lo {
            self.hi = self.lo;
        }
        while self.hi < events.len() && events[self.hi].day() <= end {
            self.hi += 1;
        }
        Some(EventSlice {
            window,
            log: self.log,
            lo: self.lo,
            hi: self.hi,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{parse_events, EventFormat};

    fn day(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn window_count_formula() {
        // D = 40, W = 30, s = 1 -> 11 windows
        let ws = enumerate_windows(day("2010-01-01"), day("2010-02-09"), 30, 1).unwrap();
        assert_eq!(ws.len(), 11);
        // D = 40, W = 30, s = 7 -> 2 windows starting at day 0 and day 7
        let ws = enumerate_windows(day("2010-01-01"), day("2010-02-09"), 30, 7).unwrap();
        assert_eq!(ws.len(), 2);
        assert_eq!(ws[0].start_day, day("2010-01-01"));
        assert_eq!(ws[1].start_day, day("2010-01-08"));
    }

    #[test]
    fn analysis_range_yields_674_windows() {
        // 2010-01-01 .. 2011-12-04 is 703 inclusive days.
        let ws = enumerate_windows(day("2010-01-01"), day("2011-12-04"), 30, 1).unwrap();
        assert_eq!(ws.len(), 674);
        assert!(ws.iter().all(|w| w.end_day() <= day("2011-12-04")));
    }

    #[test]
    fn short_range_yields_empty() {
        let ws = enumerate_windows(day("2010-01-01"), day("2010-01-10"), 30, 1).unwrap();
        assert!(ws.is_empty());
    }

    #[test]
    fn zero_params_error() {
        assert!(enumerate_windows(day("2010-01-01"), day("2010-03-01"), 0, 1).is_err());
        assert!(enumerate_windows(day("2010-01-01"), day("2010-03-01"), 30, 0).is_err());
    }

    fn log_with_days(days: &[&str]) -> crate::events::EventLog {
        let mut s = String::new();
        for (i, d) in days.iter().enumerate() {
            s.push_str(&format!(
                "{{\"kind\":\"report\",\"bug\":\"{i}\",\"author\":\"a{i}\",\"ts\":\"{d}T12:00:00Z\"}}\n"
            ));
        }
        parse_events(s.as_bytes(), EventFormat::Jsonl).unwrap().0
    }

    #[test]
    fn boundary_inclusion_exclusion() {
        let log = log_with_days(&["2010-01-05", "2010-02-04"]);
        // window covering 2010-01-05 .. 2010-02-03
        let w = WindowSpec {
            index: 0,
            start_day: day("2010-01-05"),
            length_days: 30,
            slide_days: 1,
        };
        let slice = events_in_window(&log, w);
        // start_day included, start_day + W excluded
        assert_eq!(slice.events().len(), 1);
        assert_eq!(slice.events()[0].bug_id, "0");
    }

    #[test]
    fn interior_event_in_exactly_30_slices() {
        let mut days = Vec::new();
        // activity on every day of a 90-day range so windows exist throughout
        let start = day("2010-01-01");
        for i in 0..90 {
            days.push(start.checked_add_days(Days::new(i)).unwrap().to_string());
        }
        let refs: Vec<&str> = days.iter().map(|s| s.as_str()).collect();
        let log = log_with_days(&refs);
        let windows = enumerate_windows(day("2010-01-01"), day("2010-03-31"), 30, 1).unwrap();
        let target = day("2010-02-15"); // interior: > 29 days from both ends
        let count = WindowSlicer::new(&log, &windows)
            .filter(|s| s.events().iter().any(|e| e.day() == target))
            .count();
        assert_eq!(count, 30);
    }

    #[test]
    fn slicer_matches_bisecting_slices() {
        let log = log_with_days(&[
            "2010-01-01",
            "2010-01-05",
            "2010-01-20",
            "2010-02-10",
            "2010-02-28",
            "2010-03-15",
        ]);
        let windows = enumerate_windows(day("2010-01-01"), day("2010-03-20"), 30, 3).unwrap();
        let incremental: Vec<Vec<&str>> = WindowSlicer::new(&log, &windows)
            .map(|s| s.events().iter().map(|e| e.bug_id.as_str()).collect())
            .collect();
        let direct: Vec<Vec<&str>> = windows
            .iter()
            .map(|&w| {
                events_in_window(&log, w)
                    .events()
                    .iter()
                    .map(|e| e.bug_id.as_str())
                    .collect()
            })
            .collect();
        assert_eq!(incremental, direct);
    }

    #[test]
    fn adjacent_slices_differ_only_at_edges() {
        let mut days = Vec::new();
        let start = day("2010-01-01");
        for i in 0..60 {
            days.push(start.checked_add_days(Days::new(i)).unwrap().to_string());
        }
        let refs: Vec<&str> = days.iter().map(|s| s.as_str()).collect();
        let log = log_with_days(&refs);
        let windows = enumerate_windows(day("2010-01-01"), day("2010-03-01"), 30, 1).unwrap();
        let slices: Vec<_> = WindowSlicer::new(&log, &windows).collect();
        for pair in slices.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let a_days: std::collections::HashSet<_> =
                a.events().iter().map(|e| e.day()).collect();
            let b_days: std::collections::HashSet<_> =
                b.events().iter().map(|e| e.day()).collect();
            let leaving: Vec<_> = a_days.difference(&b_days).collect();
            let entering: Vec<_> = b_days.difference(&a_days).collect();
            assert!(leaving.len() <= 1);
            assert!(entering.len() <= 1);
        }
    }

    #[test]
    fn union_of_slices_covers_every_in_range_event() {
        let log = log_with_days(&["2010-01-03", "2010-01-20", "2010-02-25"]);
        let windows = enumerate_windows(day("2010-01-01"), day("2010-03-01"), 30, 1).unwrap();
        let mut covered = std::collections::HashSet::new();
        for s in WindowSlicer::new(&log, &windows) {
            for e in s.events() {
                covered.insert(e.bug_id.clone());
            }
        }
        assert_eq!(covered.len(), log.events.len());
    }
}
