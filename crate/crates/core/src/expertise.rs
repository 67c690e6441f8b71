//! Expertise derivation from version-control commit records.
//!
//! Commits arrive as CSV `author,project,path,ts`. A participant who ever
//! committed is a developer; everyone else is a pure user. Expertise tags
//! are the commit's project name, its leading path directory segments
//! (lowercased, deduplicated per commit, capped at depth 6), the file stem,
//! and a coarse file category (source/test/doc/build/other).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;

use chrono::{DateTime, Timelike, Utc};

use crate::error::{Error, Result};
use crate::identity::{normalize_alias, IdentityConfig, IdentityTable};
use crate::events::Reject;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommitRecord {
    pub author_raw: String,
    pub project: String,
    pub target_path: String,
    pub ts: DateTime<Utc>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Developer,
    PureUser,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Developer => "developer",
            Role::PureUser => "pure_user",
        }
    }
}

/// Per-participant expertise: tag multiset, touched projects, and role.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpertiseProfile {
    pub participant: u32,
    pub commit_count: usize,
    pub tags: BTreeMap<String, usize>,
    pub projects: BTreeSet<String>,
    pub role: Role,
}

impl ExpertiseProfile {
    pub fn empty(participant: u32) -> Self {
        Self {
            participant,
            commit_count: 0,
            tags: BTreeMap::new(),
            projects: BTreeSet::new(),
            role: Role::PureUser,
        }
    }

    /// Tags ranked by multiplicity descending, ties lexicographic.
    pub fn ranked_tags(&self) -> Vec<(&str, usize)> {
        let mut out: Vec<(&str, usize)> = self
            .tags
            .iter()
            .map(|(t, &c)| (t.as_str(), c))
            .collect();
        out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        out
    }
}

/// Parse the canonical commits CSV. A bad header is fatal; bad rows are
/// collected as rejects.
pub fn parse_commits<R: Read>(reader: R) -> Result<(Vec<CommitRecord>, Vec<Reject>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Format(format!("expertise: unreadable csv header: {e}")))?
        .clone();
    let expect = ["author", "project", "path", "ts"];
    if headers.iter().collect::<Vec<_>>() != expect {
        return Err(Error::Format(format!(
            "expertise: commits header must be {:?}, got {:?}",
            expect.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut commits = Vec::new();
    let mut rejects = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Format(format!("expertise: {e}")))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let mut reject = |reason: &str| {
            rejects.push(Reject {
                line,
                reason: reason.to_string(),
            })
        };
        if rec.len() != 4 {
            reject(&format!("expected 4 fields, got {}", rec.len()));
            continue;
        }
        let (author, project, path, ts) = (&rec[0], &rec[1], &rec[2], &rec[3]);
        if author.trim().is_empty() {
            reject("missing author");
            continue;
        }
        if project.is_empty() {
            reject("missing project");
            continue;
        }
        if path.is_empty() {
            reject("missing path");
            continue;
        }
        let ts = match DateTime::parse_from_rfc3339(ts) {
            Ok(t) => t.with_timezone(&Utc).with_nanosecond(0).unwrap(),
            Err(_) => {
                reject(&format!("unparseable timestamp {ts:?}"));
                continue;
            }
        };
        commits.push(CommitRecord {
            author_raw: author.to_string(),
            project: project.to_string(),
            target_path: path.to_string(),
            ts,
        });
    }
    Ok((commits, rejects))
}

/// Directory segments beyond this depth carry little signal and a lot of
/// noise.
const SEGMENT_DEPTH_CAP: usize = 6;

fn file_category(dirs: &[&str], stem: &str, ext: &str) -> &'static str {
    if dirs.iter().any(|d| *d == "test" || *d == "tests") || stem.ends_with("test") {
        return "test";
    }
    match ext {
        "c" | "cc" | "cpp" | "cxx" | "h" | "hpp" | "hxx" | "java" | "kt" | "rs" | "py" | "js"
        | "ts" | "go" | "rb" | "cs" | "m" | "mm" | "scala" | "sh" | "pl" | "s" | "asm" => "source",
        "md" | "markdown" | "txt" | "rst" | "html" | "htm" | "tex" | "pdf" | "adoc" | "doc" => {
            "doc"
        }
        "mk" | "cmake" | "gradle" | "bzl" | "bazel" | "bp" | "am" | "ac" | "m4" | "pro"
        | "ninja" => "build",
        "" => match stem {
            "makefile" | "dockerfile" | "kbuild" | "configure" | "cmakelists" => "build",
            _ => "other",
        },
        _ => "other",
    }
}

/// Tags for one commit: project, leading directory segments, file stem, and
/// category — all lowercased and deduplicated within the commit.
fn commit_tags(commit: &CommitRecord) -> BTreeSet<String> {
    let mut tags = BTreeSet::new();
    tags.insert(commit.project.to_lowercase());
    let segments: Vec<&str> = commit
        .target_path
        .split('/')
        .filter(|s| !s.is_empty())
        .collect();
    let (dirs, file) = match segments.split_last() {
        Some((file, dirs)) => (dirs, *file),
        None => return tags,
    };
    let dirs_lower: Vec<String> = dirs
        .iter()
        .take(SEGMENT_DEPTH_CAP)
        .map(|d| d.to_lowercase())
        .collect();
    for d in &dirs_lower {
        tags.insert(d.clone());
    }
    let file_lower = file.to_lowercase();
    let (stem, ext) = match file_lower.rsplit_once('.') {
        Some((s, e)) if !s.is_empty() => (s, e),
        _ => (file_lower.as_str(), ""),
    };
    if !stem.is_empty() {
        tags.insert(stem.to_string());
    }
    let dir_refs: Vec<&str> = dirs_lower.iter().map(|s| s.as_str()).collect();
    tags.insert(file_category(&dir_refs, stem, ext).to_string());
    tags
}

/// Derive one participant's profile from their commits.
pub fn derive_expertise(participant: u32, commits: &[&CommitRecord]) -> ExpertiseProfile {
    let mut tags: BTreeMap<String, usize> = BTreeMap::new();
    let mut projects = BTreeSet::new();
    for commit in commits {
        projects.insert(commit.project.clone());
        for tag in commit_tags(commit) {
            *tags.entry(tag).or_insert(0) += 1;
        }
    }
    ExpertiseProfile {
        participant,
        commit_count: commits.len(),
        tags,
        projects,
        role: if commits.is_empty() {
            Role::PureUser
        } else {
            Role::Developer
        },
    }
}

/// Join commits to bug participants through alias normalization (plus any
/// manual merges) and derive a profile per participant that has commits.
/// Commit authors absent from the bug community are skipped.
pub fn build_profiles(
    ids: &IdentityTable,
    commits: &[CommitRecord],
    icfg: &IdentityConfig,
) -> Result<HashMap<u32, ExpertiseProfile>> {
    let mut grouped: HashMap<u32, Vec<&CommitRecord>> = HashMap::new();
    for commit in commits {
        let (alias, _) = normalize_alias(&commit.author_raw, icfg)?;
        if let Some(idx) = ids.idx_of_alias(&alias) {
            grouped.entry(idx).or_default().push(commit);
        }
    }
    Ok(grouped
        .into_iter()
        .map(|(idx, commits)| (idx, derive_expertise(idx, &commits)))
        .collect())
}

/// Ranked common tags and the developer count for one cluster's members.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterExpertise {
    pub cluster_id: usize,
    pub member_count: usize,
    pub developer_count: usize,
    /// Tag ranking by total multiplicity, descending, ties lexicographic.
    pub top_tags: Vec<(String, usize)>,
}

pub fn cluster_expertise_summary(
    cluster_id: usize,
    members: &[u32],
    profiles: &HashMap<u32, ExpertiseProfile>,
) -> ClusterExpertise {
    let mut tags: BTreeMap<String, usize> = BTreeMap::new();
    let mut developer_count = 0;
    for m in members {
        if let Some(profile) = profiles.get(m) {
            if profile.role == Role::Developer {
                developer_count += 1;
            }
            for (t, c) in &profile.tags {
                *tags.entry(t.clone()).or_insert(0) += c;
            }
        }
    }
    let mut top_tags: Vec<(String, usize)> = tags.into_iter().collect();
    top_tags.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ClusterExpertise {
        cluster_id,
        member_count: members.len(),
        developer_count,
        top_tags,
    }
}
