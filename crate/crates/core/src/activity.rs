//! Participant × window centrality matrix and activity patterns.
//!
//! Rows are participants that attain nonzero normalized betweenness in at
//! least one window (all-zero rows are removed); columns are windows. A run
//! is a maximal interval of consecutive nonzero windows. Values derive from
//! exact path-count ratios, so "nonzero" means exactly that — no epsilon.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::identity::IdentityTable;

/// One participant's score in one window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CentralityRecord {
    pub participant: u32,
    pub window_index: usize,
    pub raw_b: f64,
    pub normalized_b: f64,
}

/// Dense participants × windows matrix of normalized betweenness, rows
/// ordered by participant alias.
#[derive(Clone, Debug, PartialEq)]
pub struct CentralityMatrix {
    pub participants: Vec<u32>,
    pub n_windows: usize,
    values: Vec<f64>,
}

impl CentralityMatrix {
    pub fn n_rows(&self) -> usize {
        self.participants.len()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.n_windows..(r + 1) * self.n_windows]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks() rejects a zero size; an empty matrix has no rows anyway
        self.values.chunks(self.n_windows.max(1))
    }

    /// Fraction of windows with a nonzero value in row `r`.
    pub fn coverage(&self, r: usize) -> f64 {
        if self.n_windows == 0 {
            return 0.0;
        }
        self.row(r).iter().filter(|&&v| v > 0.0).count() as f64 / self.n_windows as f64
    }

    /// Build a matrix directly from equal-length rows.
    pub fn from_rows(participants: Vec<u32>, rows: Vec<Vec<f64>>) -> Self {
        let n_windows = rows.first().map(|r| r.len()).unwrap_or(0);
        assert!(rows.iter().all(|r| r.len() == n_windows));
        Self {
            participants,
            n_windows,
            values: rows.into_iter().flatten().collect(),
        }
    }
}

/// Assemble the dense matrix from per-window records; missing pairs are 0
/// and all-zero rows are dropped. Records must stay inside the window set
/// and may not collide.
pub fn assemble_matrix(
    records: &[CentralityRecord],
    n_windows: usize,
    ids: &IdentityTable,
) -> Result<CentralityMatrix> {
    let mut rows: HashMap<u32, Vec<f64>> = HashMap::new();
    let mut filled: HashMap<u32, Vec<bool>> = HashMap::new();
    for rec in records {
        if rec.window_index >= n_windows {
            return Err(Error::Consistency(format!(
                "activity: record window {} outside window set of {}",
                rec.window_index, n_windows
            )));
        }
        if rec.participant as usize >= ids.len() {
            return Err(Error::Consistency(format!(
                "activity: unknown participant index {}",
                rec.participant
            )));
        }
        let row = rows
            .entry(rec.participant)
            .or_insert_with(|| vec![0.0; n_windows]);
        let seen = filled
            .entry(rec.participant)
            .or_insert_with(|| vec![false; n_windows]);
        if seen[rec.window_index] {
            return Err(Error::Consistency(format!(
                "activity: duplicate record for participant {} window {}",
                rec.participant, rec.window_index
            )));
        }
        seen[rec.window_index] = true;
        row[rec.window_index] = rec.normalized_b;
    }

    let mut participants: Vec<u32> = rows
        .iter()
        .filter(|(_, row)| row.iter().any(|&v| v > 0.0))
        .map(|(&p, _)| p)
        .collect();
    // identity table indices are alias-ordered already
    participants.sort_unstable();

    let mut values = Vec::with_capacity(participants.len() * n_windows);
    for &p in &participants {
        values.extend_from_slice(&rows[&p]);
    }
    Ok(CentralityMatrix {
        participants,
        n_windows,
        values,
    })
}

/// Maximal intervals `[first, last]` (inclusive window indices) where the
/// value is nonzero.
pub fn detect_runs(row: &[f64]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start: Option<usize> = None;
    for (i, &v) in row.iter().enumerate() {
        if v > 0.0 {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            runs.push((s, i - 1));
        }
    }
    if let Some(s) = start {
        runs.push((s, row.len() - 1));
    }
    runs
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PatternLabel {
    OneTime,
    Phaser,
    Continuous,
}

impl PatternLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PatternLabel::OneTime => "one_time",
            PatternLabel::Phaser => "phaser",
            PatternLabel::Continuous => "continuous",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "one_time" => Some(PatternLabel::OneTime),
            "phaser" => Some(PatternLabel::Phaser),
            "continuous" => Some(PatternLabel::Continuous),
            _ => None,
        }
    }
}

/// Coverage at or above the threshold is Continuous; otherwise one run is
/// OneTime and more than one is Phaser.
pub fn classify(runs: &[(usize, usize)], coverage: f64, continuous_threshold: f64) -> PatternLabel {
    if coverage >= continuous_threshold {
        PatternLabel::Continuous
    } else if runs.len() <= 1 {
        PatternLabel::OneTime
    } else {
        PatternLabel::Phaser
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActivityPattern {
    pub participant: u32,
    pub runs: Vec<(usize, usize)>,
    pub coverage: f64,
    pub label: PatternLabel,
}

/// Classify every matrix row.
pub fn classify_all(matrix: &CentralityMatrix, continuous_threshold: f64) -> Vec<ActivityPattern> {
    matrix
        .participants
        .iter()
        .enumerate()
        .map(|(r, &participant)| {
            let runs = detect_runs(matrix.row(r));
            let coverage = matrix.coverage(r);
            let label = classify(&runs, coverage, continuous_threshold);
            ActivityPattern {
                participant,
                runs,
                coverage,
                label,
            }
        })
        .collect()
}

/// Per-window series: number of rows active (> 0) and the column sums.
pub fn summary_series(matrix: &CentralityMatrix) -> (Vec<usize>, Vec<f64>) {
    let mut active = vec![0usize; matrix.n_windows];
    let mut sums = vec![0.0f64; matrix.n_windows];
    for row in matrix.rows() {
        for (w, &v) in row.iter().enumerate() {
            if v > 0.0 {
                active[w] += 1;
            }
            sums[w] += v;
        }
    }
    (active, sums)
}
