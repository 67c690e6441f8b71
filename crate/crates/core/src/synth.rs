//! Synthetic event logs with planted ground truth.
//!
//! The generator plants three participant regimes and records the intended
//! outcome for each, giving the pipeline an end-to-end oracle:
//!
//! - **Continuous** participants perform `base_rate` interaction units per
//!   day (Poisson) across the whole range. A unit alternates between
//!   reporting a bug that a fresh single-use counterpart comments on, and
//!   commenting on a fresh counterpart's bug. Units on two different days of
//!   a window make the participant the center of a star of counterparts, so
//!   their betweenness stays positive in essentially every window.
//! - **Phaser clusters** burst at `burst_rate` events per member-day inside
//!   a ±15-day band around their assigned release day. Burst events
//!   alternate between single-use-counterpart units (which hang fresh
//!   leaves off the member) and comments on a uniformly random earlier
//!   cluster bug (which weld the members into one component), so the band
//!   forms a single large structure whose interior path mass lifts both the
//!   members' betweenness and the per-window sum well above quiet periods.
//!   Every member also bridges two fresh counterparts on a shared anchor
//!   day placed at least a window length away from every band, giving each
//!   member the second activity run that separates a phaser from a
//!   one-time participant.
//! - **One-shot** participants act on a single random day: they report one
//!   bug that draws a comment and leave one comment on another fresh bug —
//!   the minimal footprint with observable (nonzero) betweenness, since the
//!   participants of a single bug form a clique in which everyone scores
//!   zero.
//!
//! Single-use counterparts are unique per unit, carry no planted label, and
//! score zero themselves, so the matrix filter drops them. Generation is
//! single-threaded with a fixed draw order: one seed, one byte stream.

use std::collections::BTreeMap;

use chrono::{Days, NaiveDate, TimeZone, Utc};
use rand_chacha::ChaCha8Rng;

use crate::activity::PatternLabel;
use crate::error::{Error, Result};
use crate::events::{parse_events, EventFormat, EventLog};
use crate::sampling;

/// Half-width of a phaser cluster's activity band around its release day.
const BAND_HALF_DAYS: u32 = 15;
/// Quiet days required between the anchor unit and every band so the two
/// activity periods land in disjoint window runs (window length 30, slide 1).
const ANCHOR_GAP_DAYS: u32 = 31;

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_days: u32,
    pub n_continuous: u32,
    pub n_phaser_clusters: u32,
    pub phaser_cluster_size: u32,
    pub n_oneshot: u32,
    /// Day offsets (0-based) of planted releases; each phaser cluster takes
    /// one in order.
    pub release_days: Vec<u32>,
    /// Interaction units per continuous participant per day.
    pub base_rate: f64,
    /// Events per phaser member per band day.
    pub burst_rate: f64,
    pub start_date: NaiveDate,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_days: 200,
            n_continuous: 5,
            n_phaser_clusters: 4,
            phaser_cluster_size: 8,
            n_oneshot: 20,
            release_days: vec![50, 90, 130, 170],
            base_rate: 1.0,
            burst_rate: 3.0,
            start_date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
        }
    }
}

/// Intended outcomes per planted participant, keyed by alias. Single-use
/// counterparts are absent by design.
#[derive(Clone, Debug, Default)]
pub struct GroundTruth {
    pub patterns: BTreeMap<String, PatternLabel>,
    /// Planted cluster id per phaser member.
    pub clusters: BTreeMap<String, usize>,
}

impl GroundTruth {
    /// CSV export `participant,pattern,cluster` (cluster blank outside
    /// phaser groups).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("participant,pattern,cluster\n");
        for (alias, label) in &self.patterns {
            let cluster = self
                .clusters
                .get(alias)
                .map(|c| c.to_string())
                .unwrap_or_default();
            out.push_str(&format!("{alias},{},{cluster}\n", label.as_str()));
        }
        out
    }
}

struct Emitter {
    lines: Vec<RawEvent>,
    day_seq: u32,
    current_day: u32,
    bug_seq: u64,
    sat_seq: u64,
    start_date: NaiveDate,
}

struct RawEvent {
    kind: &'static str,
    bug: String,
    author: String,
    day: u32,
    second: u32,
}

impl Emitter {
    fn new(start_date: NaiveDate) -> Self {
        Self {
            lines: Vec::new(),
            day_seq: 0,
            current_day: 0,
            bug_seq: 0,
            sat_seq: 0,
            start_date,
        }
    }

    fn fresh_bug(&mut self) -> String {
        self.bug_seq += 1;
        format!("b{:06}", self.bug_seq)
    }

    fn fresh_counterpart(&mut self) -> String {
        self.sat_seq += 1;
        format!("sat{:06}", self.sat_seq)
    }

    fn push(&mut self, kind: &'static str, bug: String, author: String, day: u32) -> Result<()> {
        if day != self.current_day {
            self.current_day = day;
            self.day_seq = 0;
        }
        if self.day_seq >= 86_400 {
            return Err(Error::Argument(
                "synth: more than 86400 events on one day; lower the rates".into(),
            ));
        }
        self.lines.push(RawEvent {
            kind,
            bug,
            author,
            day,
            second: self.day_seq,
        });
        self.day_seq += 1;
        Ok(())
    }

    /// Bridge unit: `author` reports a bug that one fresh counterpart
    /// comments on, then comments on a second fresh counterpart's bug.
    /// Yields a counterpart–author–counterpart path, hence positive
    /// betweenness for `author` in every window containing the day.
    fn bridge_unit(&mut self, author: &str, day: u32) -> Result<()> {
        let own_bug = self.fresh_bug();
        let helper_a = self.fresh_counterpart();
        self.push("report", own_bug.clone(), author.to_string(), day)?;
        self.push("comment", own_bug, helper_a, day)?;
        let other_bug = self.fresh_bug();
        let helper_b = self.fresh_counterpart();
        self.push("report", other_bug.clone(), helper_b, day)?;
        self.push("comment", other_bug, author.to_string(), day)?;
        Ok(())
    }

    fn into_jsonl(mut self) -> String {
        self.lines
            .sort_by_key(|e| (e.day, e.second));
        let mut out = String::new();
        for e in &self.lines {
            let date = self
                .start_date
                .checked_add_days(Days::new(e.day as u64))
                .expect("synth day within calendar");
            let ts = Utc
                .from_utc_datetime(
                    &date
                        .and_hms_opt(e.second / 3600, (e.second / 60) % 60, e.second % 60)
                        .expect("second offset below 86400"),
                )
                .to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
            out.push_str(&format!(
                "{{\"kind\":\"{}\",\"bug\":\"{}\",\"author\":\"{}\",\"ts\":\"{ts}\"}}\n",
                e.kind, e.bug, e.author
            ));
        }
        out
    }
}

fn validate(config: &SynthConfig) -> Result<Option<u32>> {
    if config.burst_rate < config.base_rate {
        return Err(Error::Argument(
            "synth: burst_rate must be >= base_rate".into(),
        ));
    }
    if config.base_rate < 0.0 {
        return Err(Error::Argument("synth: negative base_rate".into()));
    }
    let planted =
        config.n_continuous + config.n_phaser_clusters * config.phaser_cluster_size + config.n_oneshot;
    if planted > 0 && config.n_days == 0 {
        return Err(Error::Argument(
            "synth: n_days must be >= 1 when participants are planted".into(),
        ));
    }
    if config.n_phaser_clusters as usize > config.release_days.len() {
        return Err(Error::Argument(format!(
            "synth: {} phaser clusters but only {} release days",
            config.n_phaser_clusters,
            config.release_days.len()
        )));
    }
    if config.n_phaser_clusters == 0 || config.phaser_cluster_size == 0 {
        return Ok(None);
    }
    for &r in &config.release_days[..config.n_phaser_clusters as usize] {
        if r >= config.n_days {
            return Err(Error::Argument(format!(
                "synth: release day {r} outside the {}-day range",
                config.n_days
            )));
        }
    }
    // The anchor day sits a full window length away from every band, before
    // the earliest or after the latest, so each phaser member gets a second,
    // disjoint activity run.
    let bands: Vec<(u32, u32)> = config.release_days[..config.n_phaser_clusters as usize]
        .iter()
        .map(|&r| {
            (
                r.saturating_sub(BAND_HALF_DAYS),
                (r + BAND_HALF_DAYS).min(config.n_days - 1),
            )
        })
        .collect();
    let min_start = bands.iter().map(|b| b.0).min().unwrap();
    let max_end = bands.iter().map(|b| b.1).max().unwrap();
    if min_start >= ANCHOR_GAP_DAYS {
        Ok(Some(0))
    } else if max_end + ANCHOR_GAP_DAYS < config.n_days {
        Ok(Some(config.n_days - 1))
    } else {
        Err(Error::Argument(format!(
            "synth: no room for a phaser anchor day {ANCHOR_GAP_DAYS} days clear of the bands"
        )))
    }
}

/// Generate a log and its ground truth. Deterministic per seed; the same
/// seed yields a byte-identical serialized log.
pub fn generate(config: &SynthConfig) -> Result<(EventLog, GroundTruth)> {
    let jsonl = generate_jsonl(config)?;
    let (log, report) = parse_events(jsonl.0.as_bytes(), EventFormat::Jsonl)?;
    debug_assert!(report.rejects.is_empty());
    Ok((log, jsonl.1))
}

/// Generate the canonical JSONL body and ground truth without parsing.
pub fn generate_jsonl(config: &SynthConfig) -> Result<(String, GroundTruth)> {
    let anchor_day = validate(config)?;
    let mut rng: ChaCha8Rng = sampling::seeded(config.seed);
    let mut emitter = Emitter::new(config.start_date);
    let mut truth = GroundTruth::default();

    let continuous: Vec<String> = (0..config.n_continuous)
        .map(|i| format!("cont{i:02}"))
        .collect();
    let phasers: Vec<Vec<String>> = (0..config.n_phaser_clusters)
        .map(|g| {
            (0..config.phaser_cluster_size)
                .map(|m| format!("ph{g:02}_{m:02}"))
                .collect()
        })
        .collect();
    let oneshots: Vec<String> = (0..config.n_oneshot)
        .map(|i| format!("once{i:02}"))
        .collect();

    for alias in &continuous {
        truth
            .patterns
            .insert(alias.clone(), PatternLabel::Continuous);
    }
    for (g, members) in phasers.iter().enumerate() {
        for alias in members {
            truth.patterns.insert(alias.clone(), PatternLabel::Phaser);
            truth.clusters.insert(alias.clone(), g);
        }
    }
    for alias in &oneshots {
        truth.patterns.insert(alias.clone(), PatternLabel::OneTime);
    }

    // fixed draw order: one-shot days first, then the day-major walk
    let oneshot_days: Vec<u32> = oneshots
        .iter()
        .map(|_| sampling::below(&mut rng, config.n_days as usize) as u32)
        .collect();

    let bands: Vec<(u32, u32)> = (0..config.n_phaser_clusters as usize)
        .map(|g| {
            let r = config.release_days[g];
            (
                r.saturating_sub(BAND_HALF_DAYS),
                (r + BAND_HALF_DAYS).min(config.n_days.saturating_sub(1)),
            )
        })
        .collect();
    // open cluster bugs: (bug id, reporter) per cluster
    let mut cluster_bugs: Vec<Vec<(String, String)>> =
        vec![Vec::new(); config.n_phaser_clusters as usize];
    let mut continuous_flip = vec![false; continuous.len()];
    let mut member_step: Vec<Vec<u32>> = phasers
        .iter()
        .map(|members| vec![0u32; members.len()])
        .collect();

    for day in 0..config.n_days {
        if anchor_day == Some(day) {
            for members in &phasers {
                for alias in members {
                    emitter.bridge_unit(alias, day)?;
                }
            }
        }
        for (i, alias) in continuous.iter().enumerate() {
            let units = sampling::poisson(&mut rng, config.base_rate);
            for _ in 0..units {
                // alternate the unit's direction; either way one author
                // event plus one counterpart event
                if continuous_flip[i] {
                    let bug = emitter.fresh_bug();
                    let helper = emitter.fresh_counterpart();
                    emitter.push("report", bug.clone(), helper, day)?;
                    emitter.push("comment", bug, alias.clone(), day)?;
                } else {
                    let bug = emitter.fresh_bug();
                    let helper = emitter.fresh_counterpart();
                    emitter.push("report", bug.clone(), alias.clone(), day)?;
                    emitter.push("comment", bug, helper, day)?;
                }
                continuous_flip[i] = !continuous_flip[i];
            }
        }
        for (g, members) in phasers.iter().enumerate() {
            let (band_start, band_end) = bands[g];
            if day < band_start || day > band_end {
                continue;
            }
            let release_day = config.release_days[g].min(config.n_days - 1);
            for (m, alias) in members.iter().enumerate() {
                if day == release_day {
                    emitter.bridge_unit(alias, day)?;
                }
                let events = sampling::poisson(&mut rng, config.burst_rate);
                for _ in 0..events {
                    let step = member_step[g][m];
                    member_step[g][m] += 1;
                    if step.is_multiple_of(2) {
                        // counterpart unit: a fresh leaf hanging off the member
                        let bug = emitter.fresh_bug();
                        let helper = emitter.fresh_counterpart();
                        if step.is_multiple_of(4) {
                            emitter.push("report", bug.clone(), alias.clone(), day)?;
                            emitter.push("comment", bug, helper, day)?;
                        } else {
                            emitter.push("report", bug.clone(), helper, day)?;
                            emitter.push("comment", bug, alias.clone(), day)?;
                        }
                    } else {
                        // within-cluster interaction on a random earlier bug
                        let open = &cluster_bugs[g];
                        let report_new = open.is_empty() || sampling::unit_f64(&mut rng) < 0.3;
                        if report_new {
                            let bug = emitter.fresh_bug();
                            emitter.push("report", bug.clone(), alias.clone(), day)?;
                            cluster_bugs[g].push((bug, alias.clone()));
                        } else {
                            let pick = sampling::below(&mut rng, open.len());
                            let bug = open[pick].0.clone();
                            emitter.push("comment", bug, alias.clone(), day)?;
                        }
                    }
                }
            }
        }
        for (i, alias) in oneshots.iter().enumerate() {
            if oneshot_days[i] == day {
                emitter.bridge_unit(alias, day)?;
            }
        }
    }

    Ok((emitter.into_jsonl(), truth))
}
