//! Bug-report to fixing-commit links and their join with the corpus.
//!
//! Pattern matching over commit messages lives in the companion crate; this
//! module only holds the link records and the pure set operations on them.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{BugReport, Commit};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BugLink {
    pub bug_id: String,
    pub commit_hash: String,
    pub pattern_name: String,
    pub matched_text: String,
}

/// Sorts by `(bug_id, commit_hash)` and keeps the first link of each pair.
/// The input order decides which pattern name survives a collision.
pub fn normalize_links(mut links: Vec<BugLink>) -> Vec<BugLink> {
    links.sort_by(|a, b| (&a.bug_id, &a.commit_hash).cmp(&(&b.bug_id, &b.commit_hash)));
    links.dedup_by(|b, a| a.bug_id == b.bug_id && a.commit_hash == b.commit_hash);
    links
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Dangling {
    UnknownReport(BugLink),
    UnknownCommit(BugLink),
}

impl Dangling {
    pub fn link(&self) -> &BugLink {
        match self {
            Dangling::UnknownReport(l) | Dangling::UnknownCommit(l) => l,
        }
    }
}

impl core::fmt::Display for Dangling {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Dangling::UnknownReport(l) => {
                write!(f, "link {} -> {}: no bug report with id {:?}", l.bug_id, l.commit_hash, l.bug_id)
            }
            Dangling::UnknownCommit(l) => {
                write!(f, "link {} -> {}: commit not in the ingested set", l.bug_id, l.commit_hash)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Join<'a> {
    pub pairs: Vec<(&'a BugReport, &'a Commit)>,
    pub dangling: Vec<Dangling>,
}

/// Inner join of links with reports (on id) and commits (on hash), in link
/// order. Links that miss either side are reported, not dropped.
pub fn join_links<'a>(links: &[BugLink], reports: &'a [BugReport], commits: &'a [Commit]) -> Join<'a> {
    let by_id: BTreeMap<&str, &BugReport> = reports.iter().map(|r| (r.id.as_str(), r)).collect();
    let by_hash: BTreeMap<&str, &Commit> = commits.iter().map(|c| (c.hash.as_str(), c)).collect();
    let mut join = Join { pairs: Vec::new(), dangling: Vec::new() };
    for l in links {
        match (by_id.get(l.bug_id.as_str()), by_hash.get(l.commit_hash.as_str())) {
            (Some(r), Some(c)) => join.pairs.push((r, c)),
            (None, _) => join.dangling.push(Dangling::UnknownReport(l.clone())),
            (Some(_), None) => join.dangling.push(Dangling::UnknownCommit(l.clone())),
        }
    }
    join
}
