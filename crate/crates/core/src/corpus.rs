//! Canonical bug-report and commit records, plus the raw `git log -p` reader.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugReport {
    pub id: String,
    pub short_desc: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub long_desc: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
}

impl BugReport {
    pub fn new(id: impl Into<String>, short_desc: impl Into<String>) -> Self {
        BugReport {
            id: id.into(),
            short_desc: short_desc.into(),
            long_desc: String::new(),
            label: None,
            created_at: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.id.is_empty() {
            return Err(CorpusError::EmptyId);
        }
        if self.short_desc.trim().is_empty() {
            return Err(CorpusError::EmptyShortDesc { id: self.id.clone() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commit {
    pub hash: String,
    pub message: String,
    #[serde(default)]
    pub diff_text: String,
}

impl Commit {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if is_commit_hash(&self.hash) {
            Ok(())
        } else {
            Err(CorpusError::BadHash { hash: self.hash.clone() })
        }
    }
}

/// `[0-9a-f]{7,40}`
pub fn is_commit_hash(s: &str) -> bool {
    (7..=40).contains(&s.len()) && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusError {
    EmptyId,
    EmptyShortDesc {
        id: String,
    },
    DuplicateId {
        id: String,
    },
    BadHash {
        hash: String,
    },
    /// 1-based line number in the git log stream.
    GitLog {
        line: usize,
        message: String,
    },
}

impl fmt::Display for CorpusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusError::EmptyId => write!(f, "bug report with empty id"),
            CorpusError::EmptyShortDesc { id } => {
                write!(f, "bug report {id:?} has an empty short_desc")
            }
            CorpusError::DuplicateId { id } => write!(f, "duplicate bug report id {id:?}"),
            CorpusError::BadHash { hash } => {
                write!(f, "commit hash {hash:?} is not 7-40 lowercase hex digits")
            }
            CorpusError::GitLog { line, message } => {
                write!(f, "git log parse error at line {line}: {message}")
            }
        }
    }
}

impl core::error::Error for CorpusError {}

/// Validates each report and rejects duplicate ids; order is preserved.
pub fn check_reports(reports: &[BugReport]) -> Result<(), CorpusError> {
    let mut seen = BTreeSet::new();
    for r in reports {
        r.validate()?;
        if !seen.insert(r.id.as_str()) {
            return Err(CorpusError::DuplicateId { id: r.id.clone() });
        }
    }
    Ok(())
}

/// Parses the output of `git log -p` (default pretty format).
///
/// A record starts at a `commit <hex>` line. Lines indented by four spaces
/// before the first `diff --git` form the message; other header lines
/// (`Author:`, `Date:`, `Merge:`, stat lines) are skipped. Everything from
/// `diff --git` up to the next record is kept verbatim as the diff.
pub fn parse_gitlog(stream: &str) -> Result<Vec<Commit>, CorpusError> {
    struct Pending {
        hash: String,
        message: Vec<String>,
        diff_start: Option<usize>,
    }

    fn finish(p: Pending, stream: &str, end: usize, out: &mut Vec<Commit>) {
        let diff_text = match p.diff_start {
            Some(start) => stream[start..end].to_string(),
            None => String::new(),
        };
        let mut lines: &[String] = &p.message;
        while lines.first().is_some_and(|l| l.is_empty()) {
            lines = &lines[1..];
        }
        while lines.last().is_some_and(|l| l.is_empty()) {
            lines = &lines[..lines.len() - 1];
        }
        out.push(Commit { hash: p.hash, message: lines.join("\n"), diff_text });
    }

    let mut out = Vec::new();
    let mut current: Option<Pending> = None;
    let mut offset = 0;
    for (idx, raw) in stream.split_inclusive('\n').enumerate() {
        let line_no = idx + 1;
        let start = offset;
        offset += raw.len();
        let line = raw.trim_end_matches(['\n', '\r']);

        if let Some(rest) = line.strip_prefix("commit ") {
            let hash = rest.split_whitespace().next().unwrap_or("");
            if !is_commit_hash(hash) {
                return Err(CorpusError::GitLog {
                    line: line_no,
                    message: alloc::format!("invalid commit hash {hash:?}"),
                });
            }
            if let Some(p) = current.take() {
                finish(p, stream, start, &mut out);
            }
            current = Some(Pending { hash: hash.to_string(), message: Vec::new(), diff_start: None });
            continue;
        }

        let Some(p) = current.as_mut() else {
            if line.trim().is_empty() {
                continue;
            }
            return Err(CorpusError::GitLog {
                line: line_no,
                message: alloc::format!("expected `commit <hash>`, found {line:?}"),
            });
        };
        if p.diff_start.is_some() {
            continue;
        }
        if line.starts_with("diff --git ") {
            p.diff_start = Some(start);
        } else if let Some(msg) = line.strip_prefix("    ") {
            p.message.push(msg.to_string());
        } else if line.trim().is_empty() && !p.message.is_empty() {
            p.message.push(String::new());
        }
    }
    if let Some(p) = current.take() {
        finish(p, stream, stream.len(), &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_COMMITS: &str = "\
commit 1111111111111111111111111111111111111111
Author: A <a@example.org>
Date:   Mon Jan 1 00:00:00 2024 +0000

    first commit

    with a body

commit 2222222aaaa
Author: B <b@example.org>
Date:   Tue Jan 2 00:00:00 2024 +0000

    Fix Bug #7

diff --git a/x.c b/x.c
--- a/x.c
+++ b/x.c
@@ -1 +1,2 @@
 int x;
+int y;
";

    #[test]
    fn two_commit_log() {
        let commits = parse_gitlog(TWO_COMMITS).unwrap();
        assert_eq!(commits.len(), 2);
        assert_eq!(commits[0].hash, "1111111111111111111111111111111111111111");
        assert_eq!(commits[0].message, "first commit\n\nwith a body");
        assert!(commits[0].diff_text.is_empty());
        assert_eq!(commits[1].message, "Fix Bug #7");
        assert!(commits[1].diff_text.starts_with("diff --git a/x.c b/x.c\n"));
        assert!(commits[1].diff_text.ends_with("+int y;\n"));
    }

    #[test]
    fn empty_stream() {
        assert!(parse_gitlog("").unwrap().is_empty());
        assert!(parse_gitlog("\n\n").unwrap().is_empty());
    }

    #[test]
    fn bad_header_reports_line_one() {
        let err = parse_gitlog("commmit zzz\n").unwrap_err();
        assert!(matches!(err, CorpusError::GitLog { line: 1, .. }), "{err}");
    }

    #[test]
    fn bad_hash() {
        let err = parse_gitlog("\ncommit xyz1234\n").unwrap_err();
        assert!(matches!(err, CorpusError::GitLog { line: 2, .. }));
    }

    #[test]
    fn decorated_header_and_crlf() {
        let log = "commit abcdef1 (HEAD -> main)\r\nAuthor: x\r\n\r\n    msg\r\n";
        let c = parse_gitlog(log).unwrap();
        assert_eq!(c[0].hash, "abcdef1");
        assert_eq!(c[0].message, "msg");
    }

    #[test]
    fn report_checks() {
        let ok = [BugReport::new("1", "x"), BugReport::new("2", "y")];
        assert!(check_reports(&ok).is_ok());
        let dup = [BugReport::new("7", "x"), BugReport::new("7", "y")];
        assert_eq!(check_reports(&dup), Err(CorpusError::DuplicateId { id: "7".into() }));
        assert!(matches!(BugReport::new("3", "  ").validate(), Err(CorpusError::EmptyShortDesc { .. })));
    }

    #[test]
    fn hash_check() {
        assert!(is_commit_hash("abc1234"));
        assert!(!is_commit_hash("abc123"));
        assert!(!is_commit_hash("ABC1234"));
        assert!(!is_commit_hash(&"a".repeat(41)));
    }
}
