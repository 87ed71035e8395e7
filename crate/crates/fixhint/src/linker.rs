//! Bug links from commit messages by regular-expression matching.

use std::path::Path;

use fixhint_core::corpus::Commit;
use fixhint_core::links::{normalize_links, BugLink};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkPattern {
    pub name: String,
    /// Must contain exactly one capture group, the bug id.
    pub regex: String,
}

impl LinkPattern {
    pub fn new(name: &str, regex: &str) -> Self {
        LinkPattern { name: name.to_string(), regex: regex.to_string() }
    }

    pub fn compile(&self) -> Result<Regex> {
        let bad = |message: String| Error::Pattern { name: self.name.clone(), message };
        let re = Regex::new(&self.regex).map_err(|e| bad(e.to_string()))?;
        if re.captures_len() != 2 {
            return Err(bad(format!("needs exactly one capture group, found {}", re.captures_len() - 1)));
        }
        Ok(re)
    }
}

/// `Bug #123` (any spacing, either case of the `b`) and Bugzilla
/// `show_bug.cgi?id=` URLs.
pub fn default_patterns() -> Vec<LinkPattern> {
    vec![
        LinkPattern::new("bug-hash", r"\b[Bb]ug\s*#\s*(\d+)"),
        LinkPattern::new("bugzilla-url", r"bugzilla\.[A-Za-z0-9.-]+/show_bug\.cgi\?id=(\d+)"),
    ]
}

pub fn load_patterns(path: &Path) -> Result<Vec<LinkPattern>> {
    let patterns: Vec<LinkPattern> = io::read_jsonl_values(path)?;
    for p in &patterns {
        p.compile()?;
    }
    Ok(patterns)
}

/// Every match of every pattern in every message, sorted by
/// `(bug_id, commit_hash)` with duplicate pairs collapsed.
pub fn extract_links(commits: &[Commit], patterns: &[LinkPattern]) -> Result<Vec<BugLink>> {
    let compiled = patterns.iter().map(|p| p.compile().map(|re| (p, re))).collect::<Result<Vec<_>>>()?;
    let mut links = Vec::new();
    for c in commits {
        for (p, re) in &compiled {
            for caps in re.captures_iter(&c.message) {
                links.push(BugLink {
                    bug_id: caps[1].to_string(),
                    commit_hash: c.hash.clone(),
                    pattern_name: p.name.clone(),
                    matched_text: caps[0].to_string(),
                });
            }
        }
    }
    Ok(normalize_links(links))
}
