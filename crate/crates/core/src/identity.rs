//! Participant identity normalization.
//!
//! Raw author strings in tracker dumps are semi-anonymous addresses like
//! `mathias....@gmail.com`. Normalization truncates at the `....` marker
//! (then at `@` if one remains) to obtain a short alias, and flags aliases
//! that are too short or too common to identify a person. Distinct raw
//! strings that collapse to one alias are recorded as a collision, never
//! silently merged without trace.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::events::EventLog;

#[derive(Clone, Debug)]
pub struct IdentityConfig {
    /// Aliases of at most this many characters are flagged ambiguous.
    pub ambiguity_length_threshold: usize,
    /// Fold aliases to lowercase. Off by default: case-sensitivity avoids
    /// over-merging.
    pub case_fold: bool,
    /// Aliases flagged ambiguous regardless of length.
    pub common_names: HashSet<String>,
    /// Manual raw → alias overrides, applied before the truncation rule.
    pub merges: HashMap<String, String>,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self {
            ambiguity_length_threshold: 2,
            case_fold: false,
            common_names: HashSet::new(),
            merges: HashMap::new(),
        }
    }
}

/// One resolved participant: the alias plus every raw string that mapped to
/// it. More than one raw source means an alias collision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Participant {
    pub alias: String,
    pub ambiguous: bool,
    pub raw_sources: BTreeSet<String>,
}

/// Normalize one raw author string to `(alias, ambiguous)`.
///
/// Truncates at `....` first, then strips any remaining `@domain`, so the
/// alias never contains either marker. An alias that truncates to nothing
/// becomes `"anonymous"` and is flagged ambiguous.
pub fn normalize_alias(raw: &str, cfg: &IdentityConfig) -> Result<(String, bool)> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(Error::Argument("identity: empty author string".into()));
    }
    if let Some(over) = cfg.merges.get(trimmed) {
        let ambiguous = over.chars().count() <= cfg.ambiguity_length_threshold
            || cfg.common_names.contains(over);
        return Ok((over.clone(), ambiguous));
    }
    let mut alias = match trimmed.find("....") {
        Some(i) => &trimmed[..i],
        None => trimmed,
    };
    if let Some(i) = alias.find('@') {
        alias = &alias[..i];
    }
    let mut alias = alias.trim().to_string();
    if cfg.case_fold {
        alias = alias.to_lowercase();
    }
    if alias.is_empty() {
        return Ok(("anonymous".to_string(), true));
    }
    let ambiguous = alias.chars().count() <= cfg.ambiguity_length_threshold
        || cfg.common_names.contains(&alias);
    Ok((alias, ambiguous))
}

/// Total raw → participant mapping over a log, stable across runs.
/// Participants are ordered by alias, so an index into the table doubles as
/// a deterministic participant id.
#[derive(Clone, Debug, Default)]
pub struct IdentityTable {
    participants: Vec<Participant>,
    by_raw: HashMap<String, u32>,
    by_alias: HashMap<String, u32>,
}

impl IdentityTable {
    pub fn len(&self) -> usize {
        self.participants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.participants.is_empty()
    }

    pub fn get(&self, idx: u32) -> &Participant {
        &self.participants[idx as usize]
    }

    pub fn alias(&self, idx: u32) -> &str {
        &self.participants[idx as usize].alias
    }

    pub fn idx_of_raw(&self, raw: &str) -> Option<u32> {
        self.by_raw.get(raw).copied()
    }

    pub fn idx_of_alias(&self, alias: &str) -> Option<u32> {
        self.by_alias.get(alias).copied()
    }

    pub fn participants(&self) -> &[Participant] {
        &self.participants
    }

    /// Participants whose alias absorbed more than one raw string.
    pub fn collisions(&self) -> impl Iterator<Item = &Participant> {
        self.participants.iter().filter(|p| p.raw_sources.len() > 1)
    }

    /// CSV export `raw,alias,ambiguous`, one row per raw string, sorted.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(&str, &str, bool)> = Vec::new();
        for p in &self.participants {
            for raw in &p.raw_sources {
                rows.push((raw, &p.alias, p.ambiguous));
            }
        }
        rows.sort();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["raw", "alias", "ambiguous"]).unwrap();
        for (raw, alias, amb) in rows {
            w.write_record([raw, alias, if amb { "true" } else { "false" }])
                .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

/// Build the identity table for every author appearing in the log,
/// including reporters retained only as index metadata.
pub fn build_identity_table(log: &EventLog, cfg: &IdentityConfig) -> Result<IdentityTable> {
    let mut groups: HashMap<String, (bool, BTreeSet<String>)> = HashMap::new();
    for raw in log.raw_authors() {
        let (alias, ambiguous) = normalize_alias(raw, cfg)?;
        let entry = groups.entry(alias).or_insert_with(|| (ambiguous, BTreeSet::new()));
        entry.0 = entry.0 || ambiguous;
        entry.1.insert(raw.to_string());
    }
    let mut participants: Vec<Participant> = groups
        .into_iter()
        .map(|(alias, (ambiguous, raw_sources))| Participant {
            alias,
            ambiguous,
            raw_sources,
        })
        .collect();
    participants.sort_by(|a, b| a.alias.cmp(&b.alias));

    let mut by_raw = HashMap::new();
    let mut by_alias = HashMap::new();
    for (i, p) in participants.iter().enumerate() {
        by_alias.insert(p.alias.clone(), i as u32);
        for raw in &p.raw_sources {
            by_raw.insert(raw.clone(), i as u32);
        }
    }
    Ok(IdentityTable {
        participants,
        by_raw,
        by_alias,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{parse_events, EventFormat};

    fn norm(raw: &str) -> (String, bool) {
        normalize_alias(raw, &IdentityConfig::default()).unwrap()
    }

    #[test]
    fn truncates_at_marker() {
        assert_eq!(norm("mathias....@gmail.com"), ("mathias".into(), false));
    }

    #[test]
    fn single_letter_is_ambiguous() {
        assert_eq!(norm("e....@gmail.com"), ("e".into(), true));
    }

    #[test]
    fn plain_name_unchanged() {
        assert_eq!(norm("romainguy"), ("romainguy".into(), false));
    }

    #[test]
    fn strips_at_domain_without_marker() {
        assert_eq!(norm("name@example.org"), ("name".into(), false));
    }

    #[test]
    fn empty_raw_is_error() {
        assert!(matches!(
            normalize_alias("   ", &IdentityConfig::default()),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn alias_never_contains_markers() {
        for raw in ["a@b....c", "....@gmail.com", "x....y....z", "a@b@c"] {
            let (alias, _) = norm(raw);
            assert!(!alias.contains('@'), "{raw} -> {alias}");
            assert!(!alias.contains("...."), "{raw} -> {alias}");
            assert!(!alias.is_empty());
        }
    }

    #[test]
    fn normalize_is_idempotent_on_own_output() {
        for raw in ["mathias....@gmail.com", "e....@x.com", "romainguy", "a@b....c"] {
            let (alias, _) = norm(raw);
            let (again, _) = norm(&alias);
            assert_eq!(alias, again);
        }
    }

    #[test]
    fn merge_file_overrides() {
        let mut cfg = IdentityConfig::default();
        cfg.merges.insert("Ralf.Hildebrandt".into(), "ralf".into());
        let (alias, amb) = normalize_alias("Ralf.Hildebrandt", &cfg).unwrap();
        assert_eq!(alias, "ralf");
        assert!(!amb);
    }

    #[test]
    fn common_name_list_flags_ambiguous() {
        let mut cfg = IdentityConfig::default();
        cfg.common_names.insert("benjamin".into());
        let (alias, amb) = normalize_alias("benjamin....@x.com", &cfg).unwrap();
        assert_eq!(alias, "benjamin");
        assert!(amb);
    }

    #[test]
    fn case_fold_flag() {
        let cfg = IdentityConfig {
            case_fold: true,
            ..IdentityConfig::default()
        };
        assert_eq!(normalize_alias("RomainGuy", &cfg).unwrap().0, "romainguy");
        assert_eq!(normalize_alias("RomainGuy", &IdentityConfig::default()).unwrap().0, "RomainGuy");
    }

    fn log_with_authors(authors: &[&str]) -> EventLog {
        let mut s = String::new();
        for (i, a) in authors.iter().enumerate() {
            s.push_str(&format!(
                "{{\"kind\":\"report\",\"bug\":\"{i}\",\"author\":\"{a}\",\"ts\":\"2010-01-01T00:00:0{i}Z\"}}\n"
            ));
        }
        parse_events(s.as_bytes(), EventFormat::Jsonl).unwrap().0
    }

    #[test]
    fn collision_recorded_in_raw_sources() {
        let log = log_with_authors(&["a....@x.com", "a....@y.com"]);
        let table = build_identity_table(&log, &IdentityConfig::default()).unwrap();
        assert_eq!(table.len(), 1);
        let p = table.get(0);
        assert_eq!(p.alias, "a");
        assert!(p.ambiguous);
        assert_eq!(p.raw_sources.len(), 2);
        assert_eq!(table.collisions().count(), 1);
        assert_eq!(table.idx_of_raw("a....@x.com"), table.idx_of_raw("a....@y.com"));
    }

    #[test]
    fn table_sizes() {
        let log = log_with_authors(&["solo"]);
        let table = build_identity_table(&log, &IdentityConfig::default()).unwrap();
        assert_eq!(table.len(), 1);

        let empty = log_with_authors(&[]);
        let table = build_identity_table(&empty, &IdentityConfig::default()).unwrap();
        assert!(table.is_empty());
    }

    #[test]
    fn table_is_alias_sorted_and_stable() {
        let log = log_with_authors(&["zoe", "adam", "mid"]);
        let t1 = build_identity_table(&log, &IdentityConfig::default()).unwrap();
        let t2 = build_identity_table(&log, &IdentityConfig::default()).unwrap();
        let aliases: Vec<&str> = t1.participants().iter().map(|p| p.alias.as_str()).collect();
        assert_eq!(aliases, vec!["adam", "mid", "zoe"]);
        assert_eq!(t1.participants(), t2.participants());
    }

    #[test]
    fn csv_export_shape() {
        let log = log_with_authors(&["b....@x.com", "a"]);
        let table = build_identity_table(&log, &IdentityConfig::default()).unwrap();
        let csv = table.to_csv();
        assert_eq!(
            csv,
            "raw,alias,ambiguous\na,a,true\nb....@x.com,b,true\n"
        );
    }
}
