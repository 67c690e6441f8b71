//! Per-window weighted interaction graphs.
//!
//! Within one window, each comment links its author to the bug's reporter
//! and to every distinct participant already on that bug earlier in the
//! window; every link adds one to the edge weight. The reporter link always
//! holds, even when the report predates the window, while commenter links do
//! not cross window boundaries (configurable via [`PriorScope`]).

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::events::{EventKind, EventLog};
use crate::identity::IdentityTable;
use crate::windows::{EventSlice, WindowSpec};

/// Scope of "previously made comments on this bug" when linking a comment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PriorScope {
    /// Prior commenters within the same window plus the reporter (default).
    Window,
    /// All prior commenters on the bug regardless of window, plus the
    /// reporter. Kept for sensitivity analysis.
    Global,
}

/// Undirected graph with positive integer edge weights. Nodes are identity
/// table indices; edge keys are normalized (low, high) pairs, so the map
/// iterates deterministically and equality is structural.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteractionGraph {
    pub window: WindowSpec,
    nodes: Vec<u32>,
    edges: BTreeMap<(u32, u32), u32>,
}

/// Non-fatal findings from a build: bugs whose reporter is unknown.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub orphan_bugs: Vec<String>,
}

impl InteractionGraph {
    /// Assemble a graph from explicit parts; test and oracle entry point.
    /// Rejects self-loops, zero weights, and edges with endpoints missing
    /// from `nodes`.
    pub fn from_parts(
        window: WindowSpec,
        mut nodes: Vec<u32>,
        edge_list: &[(u32, u32, u32)],
    ) -> Result<Self> {
        nodes.sort_unstable();
        nodes.dedup();
        let mut edges = BTreeMap::new();
        for &(u, v, w) in edge_list {
            if u == v {
                return Err(Error::Argument(format!("graph: self-loop on node {u}")));
            }
            if w == 0 {
                return Err(Error::Argument("graph: zero edge weight".into()));
            }
            if nodes.binary_search(&u).is_err() || nodes.binary_search(&v).is_err() {
                return Err(Error::Argument(format!(
                    "graph: edge ({u},{v}) endpoint not in node set"
                )));
            }
            *edges.entry((u.min(v), u.max(v))).or_insert(0) += w;
        }
        Ok(Self {
            window,
            nodes,
            edges,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sorted identity table indices of the nodes.
    pub fn nodes(&self) -> &[u32] {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeMap<(u32, u32), u32> {
        &self.edges
    }

    pub fn edge_weight(&self, u: u32, v: u32) -> Option<u32> {
        self.edges.get(&(u.min(v), u.max(v))).copied()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().map(|&w| w as u64).sum()
    }

    /// Adjacency over local node indices (positions in `nodes()`).
    pub fn local_adjacency(&self) -> Vec<Vec<(usize, u32)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (&(u, v), &w) in &self.edges {
            let ui = self.nodes.binary_search(&u).unwrap();
            let vi = self.nodes.binary_search(&v).unwrap();
            adj[ui].push((vi, w));
            adj[vi].push((ui, w));
        }
        adj
    }

    /// Debug export: edge list CSV `u,v,weight` with aliases, endpoints in
    /// lexicographic order within a row and rows sorted lexicographically.
    /// Canonical for golden tests.
    pub fn to_edge_list_csv(&self, ids: &IdentityTable) -> String {
        let mut rows: Vec<(String, String, u32)> = self
            .edges
            .iter()
            .map(|(&(u, v), &w)| {
                let (a, b) = (ids.alias(u).to_string(), ids.alias(v).to_string());
                if a <= b {
                    (a, b, w)
                } else {
                    (b, a, w)
                }
            })
            .collect();
        rows.sort();
        let mut out = String::from("u,v,weight\n");
        for (a, b, w) in rows {
            out.push_str(&format!("{a},{b},{w}\n"));
        }
        out
    }
}

/// Walk one bug's in-window comments in ordinal order and apply the linking
/// rule with the given sign. `global_priors`, when present, supplies for
/// each comment the distinct authors of all earlier comments on the bug
/// (global scope); otherwise priors accumulate within the walk itself.
fn accumulate_bug_edges(
    reporter: Option<u32>,
    comments: &[(u32, u32)], // (ordinal, author) in ordinal order
    global_priors: Option<&BTreeMap<u32, Vec<u32>>>, // ordinal -> prior authors
    sign: i64,
    edges: &mut HashMap<(u32, u32), i64>,
) {
    let mut bump = |a: u32, b: u32| {
        let key = (a.min(b), a.max(b));
        *edges.entry(key).or_insert(0) += sign;
    };
    match global_priors {
        None => {
            let mut prior: Vec<u32> = Vec::new();
            if let Some(r) = reporter {
                prior.push(r);
            }
            for &(_, author) in comments {
                for &p in &prior {
                    if p != author {
                        bump(author, p);
                    }
                }
                if !prior.contains(&author) {
                    prior.push(author);
                }
            }
        }
        Some(map) => {
            for &(ordinal, author) in comments {
                let mut seen_reporter = false;
                if let Some(priors) = map.get(&ordinal) {
                    for &p in priors {
                        if Some(p) == reporter {
                            seen_reporter = true;
                        }
                        if p != author {
                            bump(author, p);
                        }
                    }
                }
                if let Some(r) = reporter {
                    if !seen_reporter && r != author {
                        bump(author, r);
                    }
                }
            }
        }
    }
}

fn resolve(ids: &IdentityTable, raw: &str) -> u32 {
    ids.idx_of_raw(raw)
        .expect("identity table built from the same log")
}

/// Group a slice's events by bug: in-window comments in ordinal order plus
/// the authors of in-window events (nodes even when isolated).
struct SliceBugs {
    // bug -> (ordinal, author) comments, ordinal-sorted
    comments: BTreeMap<String, Vec<(u32, u32)>>,
    present: BTreeSet<u32>,
}

fn collect_slice(slice: &EventSlice<'_>, ids: &IdentityTable) -> SliceBugs {
    let mut comments: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
    let mut present = BTreeSet::new();
    for ev in slice.events() {
        let author = resolve(ids, &ev.author_raw);
        present.insert(author);
        if ev.kind == EventKind::Comment {
            comments
                .entry(ev.bug_id.clone())
                .or_default()
                .push((ev.ordinal, author));
        } else {
            comments.entry(ev.bug_id.clone()).or_default();
        }
    }
    for list in comments.values_mut() {
        list.sort_unstable();
    }
    SliceBugs { comments, present }
}

/// Build one window's interaction graph from its event slice.
pub fn build_graph(
    slice: &EventSlice<'_>,
    ids: &IdentityTable,
    scope: PriorScope,
) -> (InteractionGraph, BuildReport) {
    let bugs = collect_slice(slice, ids);
    let mut edges: HashMap<(u32, u32), i64> = HashMap::new();
    let mut report = BuildReport::default();

    for (bug, comments) in &bugs.comments {
        let reporter = slice.reporter_raw(bug).map(|r| resolve(ids, r));
        if reporter.is_none() && !comments.is_empty() {
            report.orphan_bugs.push(bug.clone());
        }
        let global_map;
        let global_ref = match scope {
            PriorScope::Window => None,
            PriorScope::Global => {
                global_map = global_prior_map(slice.log(), ids, bug, comments);
                Some(&global_map)
            }
        };
        accumulate_bug_edges(reporter, comments, global_ref, 1, &mut edges);
    }

    (
        materialize(slice.window, bugs.present, &edges),
        report,
    )
}

/// For global scope: distinct authors of all comments on `bug` with ordinal
/// below each in-window comment's ordinal.
fn global_prior_map(
    log: &EventLog,
    ids: &IdentityTable,
    bug: &str,
    in_window: &[(u32, u32)],
) -> BTreeMap<u32, Vec<u32>> {
    let entry = &log.index[bug];
    let mut all: Vec<(u32, u32)> = entry
        .comment_pos
        .iter()
        .map(|&p| {
            let ev = &log.events[p];
            (ev.ordinal, resolve(ids, &ev.author_raw))
        })
        .collect();
    all.sort_unstable();
    let mut out = BTreeMap::new();
    for &(ordinal, _) in in_window {
        let mut priors: Vec<u32> = Vec::new();
        for &(o, a) in &all {
            if o >= ordinal {
                break;
            }
            if !priors.contains(&a) {
                priors.push(a);
            }
        }
        out.insert(ordinal, priors);
    }
    out
}

fn materialize(
    window: WindowSpec,
    present: BTreeSet<u32>,
    edges: &HashMap<(u32, u32), i64>,
) -> InteractionGraph {
    let mut nodes: BTreeSet<u32> = present;
    let mut edge_map = BTreeMap::new();
    for (&(u, v), &w) in edges {
        assert!(w >= 0, "edge weight went negative: ({u},{v}) = {w}");
        if w > 0 {
            nodes.insert(u);
            nodes.insert(v);
            edge_map.insert((u, v), w as u32);
        }
    }
    InteractionGraph {
        window,
        nodes: nodes.into_iter().collect(),
        edges: edge_map,
    }
}

/// Incremental builder: slides the window across the day-sorted log and
/// maintains running per-bug comment state and edge weights. Advancing
/// subtracts the old contribution of every bug touched by leaving or
/// entering events, applies the delta, and re-adds the new contribution, so
/// per-window cost is proportional to the affected bugs rather than the
/// whole slice. Window scope only.
pub struct IncrementalGraphBuilder<'a> {
    log: &'a EventLog,
    ids: &'a IdentityTable,
    windows: &'a [WindowSpec],
    next: usize,
    lo: usize,
    hi: usize,
    // bug -> in-window comments (ordinal order; oldest at the front)
    bug_comments: HashMap<String, VecDeque<(u32, u32)>>,
    // bug -> count of in-window report events (node presence only)
    bug_reports: HashMap<String, u32>,
    edges: HashMap<(u32, u32), i64>,
    // author -> in-window event count
    present: HashMap<u32, u32>,
}

impl<'a> IncrementalGraphBuilder<'a> {
    pub fn new(log: &'a EventLog, ids: &'a IdentityTable, windows: &'a [WindowSpec]) -> Self {
        Self {
            log,
            ids,
            windows,
            next: 0,
            lo: 0,
            hi: 0,
            bug_comments: HashMap::new(),
            bug_reports: HashMap::new(),
            edges: HashMap::new(),
            present: HashMap::new(),
        }
    }

    fn reporter_of(&self, bug: &str) -> Option<u32> {
        self.log
            .index
            .get(bug)?
            .reporter_raw
            .as_deref()
            .map(|r| resolve(self.ids, r))
    }

    fn apply_bug_contribution(&mut self, bug: &str, sign: i64) {
        let comments = match self.bug_comments.get(bug) {
            Some(c) if !c.is_empty() => c.iter().copied().collect::<Vec<_>>(),
            _ => return,
        };
        let reporter = self.reporter_of(bug);
        accumulate_bug_edges(reporter, &comments, None, sign, &mut self.edges);
    }
}

impl<'a> Iterator for IncrementalGraphBuilder<'a> {
    type Item = (InteractionGraph, BuildReport);

    fn next(&mut self) -> Option<Self::Item> {
        let window = *self.windows.get(self.next)?;
        self.next += 1;
        let events = &self.log.events;
        let start = window.start_day;
        let end = window.end_day();

        let new_lo = {
            let mut i = self.lo;
            while i < events.len() && events[i].day() < start {
                i += 1;
            }
            i
        };
        let new_hi = {
            let mut i = self.hi.max(new_lo);
            while i < events.len() && events[i].day() <= end {
                i += 1;
            }
            i
        };

        // Bugs whose in-window comment set changes need their edge
        // contribution recomputed; report events only affect node presence.
        let mut affected: BTreeSet<String> = BTreeSet::new();
        for ev in events[self.lo..new_lo].iter().chain(&events[self.hi.max(new_lo)..new_hi]) {
            if ev.kind == EventKind::Comment {
                affected.insert(ev.bug_id.clone());
            }
        }
        for bug in &affected {
            self.apply_bug_contribution(bug, -1);
        }

        for ev in &events[self.lo..new_lo] {
            let author = resolve(self.ids, &ev.author_raw);
            let count = self.present.get_mut(&author).expect("present on removal");
            *count -= 1;
            if *count == 0 {
                self.present.remove(&author);
            }
            match ev.kind {
                EventKind::Comment => {
                    let q = self.bug_comments.get_mut(&ev.bug_id).expect("bug on removal");
                    let front = q.pop_front().expect("comment on removal");
                    debug_assert_eq!(front, (ev.ordinal, author));
                    if q.is_empty() {
                        self.bug_comments.remove(&ev.bug_id);
                    }
                }
                EventKind::Report => {
                    let c = self.bug_reports.get_mut(&ev.bug_id).expect("report on removal");
                    *c -= 1;
                    if *c == 0 {
                        self.bug_reports.remove(&ev.bug_id);
                    }
                }
            }
        }
        for ev in &events[self.hi.max(new_lo)..new_hi] {
            let author = resolve(self.ids, &ev.author_raw);
            *self.present.entry(author).or_insert(0) += 1;
            match ev.kind {
                EventKind::Comment => {
                    self.bug_comments
                        .entry(ev.bug_id.clone())
                        .or_default()
                        .push_back((ev.ordinal, author));
                }
                EventKind::Report => {
                    *self.bug_reports.entry(ev.bug_id.clone()).or_insert(0) += 1;
                }
            }
        }
        self.lo = new_lo;
        self.hi = new_hi;

        for bug in &affected {
            self.apply_bug_contribution(bug, 1);
        }

        let mut report = BuildReport::default();
        for bug in self.bug_comments.keys() {
            if self.reporter_of(bug).is_none() {
                report.orphan_bugs.push(bug.clone());
            }
        }
        report.orphan_bugs.sort();

        let present: BTreeSet<u32> = self.present.keys().copied().collect();
        Some((materialize(window, present, &self.edges), report))
    }
}
