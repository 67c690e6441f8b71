//! Property-based invariants across the ingestion and windowing layers.

use chrono::TimeZone;
use proptest::prelude::*;

use bugnet::activity::detect_runs;
use bugnet::events::{
    filter_date_range, parse_events, serialize_csv, serialize_jsonl, EventFormat,
};
use bugnet::identity::{normalize_alias, IdentityConfig};
use bugnet::windows::{enumerate_windows, events_in_window, WindowSlicer};

fn event_lines() -> impl Strategy<Value = String> {
    // a handful of bugs and authors over a two-month span
    let record = (
        prop_oneof![Just("report"), Just("comment")],
        0u8..6,
        prop_oneof![
            Just("alice".to_string()),
            Just("bob....@x.com".to_string()),
            Just("c....@y.com".to_string()),
            Just("dee@z.org".to_string()),
        ],
        0i64..60,
        0u32..86_400,
    );
    proptest::collection::vec(record, 0..40).prop_map(|records| {
        let mut out = String::new();
        for (kind, bug, author, day, second) in records {
            let date = chrono::NaiveDate::from_ymd_opt(2010, 1, 1)
                .unwrap()
                .checked_add_days(chrono::Days::new(day as u64))
                .unwrap();
            let ts = chrono::Utc
                .from_utc_datetime(
                    &date
                        .and_hms_opt(second / 3600, (second / 60) % 60, second % 60)
                        .unwrap(),
                )
                .to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
            out.push_str(&format!(
                "{{\"kind\":\"{kind}\",\"bug\":\"{bug}\",\"author\":\"{author}\",\"ts\":\"{ts}\"}}\n"
            ));
        }
        out
    })
}

proptest! {
    #[test]
    fn parse_serialize_roundtrips(input in event_lines()) {
        let (log, _) = parse_events(input.as_bytes(), EventFormat::Jsonl).unwrap();
        let (back, rep) = parse_events(serialize_jsonl(&log).as_bytes(), EventFormat::Jsonl).unwrap();
        prop_assert!(rep.rejects.is_empty());
        prop_assert_eq!(&back, &log);
        let (back_csv, rep) = parse_events(serialize_csv(&log).as_bytes(), EventFormat::Csv).unwrap();
        prop_assert!(rep.rejects.is_empty());
        prop_assert_eq!(&back_csv, &log);
    }

    #[test]
    fn filter_is_idempotent(input in event_lines(), lo in 0i64..60, len in 0i64..60) {
        let (log, _) = parse_events(input.as_bytes(), EventFormat::Jsonl).unwrap();
        let first = chrono::NaiveDate::from_ymd_opt(2010, 1, 1).unwrap()
            .checked_add_days(chrono::Days::new(lo as u64)).unwrap();
        let last = first.checked_add_days(chrono::Days::new(len as u64)).unwrap();
        let once = filter_date_range(&log, first, last).unwrap();
        let twice = filter_date_range(&once, first, last).unwrap();
        prop_assert_eq!(&twice, &once);
        for ev in &once.events {
            prop_assert!(ev.day() >= first && ev.day() <= last);
        }
    }

    #[test]
    fn ordinals_are_gapless_per_bug(input in event_lines()) {
        let (log, _) = parse_events(input.as_bytes(), EventFormat::Jsonl).unwrap();
        for entry in log.index.values() {
            for (i, &pos) in entry.comment_pos.iter().enumerate() {
                prop_assert_eq!(log.events[pos].ordinal as usize, i + 1);
            }
            if let Some(pos) = entry.report_pos {
                prop_assert_eq!(log.events[pos].ordinal, 0);
            }
        }
    }

    #[test]
    fn normalize_alias_idempotent_and_marker_free(raw in "[a-zA-Z@.]{1,20}") {
        let cfg = IdentityConfig::default();
        if let Ok((alias, _)) = normalize_alias(&raw, &cfg) {
            prop_assert!(!alias.contains('@'));
            prop_assert!(!alias.contains("...."));
            let (again, _) = normalize_alias(&alias, &cfg).unwrap();
            prop_assert_eq!(again, alias);
        }
    }

    #[test]
    fn incremental_slicer_matches_bisection(input in event_lines(), w in 1u32..40, s in 1u32..10) {
        let (log, _) = parse_events(input.as_bytes(), EventFormat::Jsonl).unwrap();
        let Some((first, last)) = log.date_range else { return Ok(()); };
        let windows = enumerate_windows(first, last, w, s).unwrap();
        for slice in WindowSlicer::new(&log, &windows) {
            let direct = events_in_window(&log, slice.window);
            prop_assert_eq!(slice.events(), direct.events());
        }
    }

    #[test]
    fn runs_partition_the_support(row in proptest::collection::vec(0.0f64..1.0, 0..50)) {
        // zero out a random-ish prefix pattern to create gaps
        let row: Vec<f64> = row
            .into_iter()
            .enumerate()
            .map(|(i, v)| if i % 3 == 0 { 0.0 } else { v })
            .collect();
        let runs = detect_runs(&row);
        // disjoint, sorted, maximal, and exactly covering the support
        let mut covered = vec![false; row.len()];
        let mut prev_end: Option<usize> = None;
        for &(a, b) in &runs {
            prop_assert!(a <= b);
            if let Some(p) = prev_end {
                prop_assert!(a > p + 1, "adjacent runs must merge");
            }
            for slot in covered.iter_mut().take(b + 1).skip(a) {
                *slot = true;
            }
            prev_end = Some(b);
        }
        for (i, &v) in row.iter().enumerate() {
            prop_assert_eq!(covered[i], v > 0.0);
        }
    }
}
