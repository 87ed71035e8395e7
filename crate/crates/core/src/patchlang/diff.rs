//! Unified-diff parsing into files and hunks.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineTag {
    Context,
    Add,
    Remove,
}

impl LineTag {
    fn prefix(self) -> char {
        match self {
            LineTag::Context => ' ',
            LineTag::Add => '+',
            LineTag::Remove => '-',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HunkLine {
    pub tag: LineTag,
    pub text: String,
    /// Followed by `\ No newline at end of file`.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub no_newline: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub old_start: usize,
    pub old_len: usize,
    pub new_start: usize,
    pub new_len: usize,
    /// Text after the closing `@@`, usually a function signature.
    pub section: String,
    pub lines: Vec<HunkLine>,
}

impl Hunk {
    pub fn header(&self) -> String {
        let mut h = format!("@@ -{},{} +{},{} @@", self.old_start, self.old_len, self.new_start, self.new_len);
        h.push_str(&self.section);
        h
    }

    /// Re-serialized body, one `\n`-terminated line per entry.
    pub fn body(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            out.push(l.tag.prefix());
            out.push_str(&l.text);
            out.push('\n');
            if l.no_newline {
                out.push_str("\\ No newline at end of file\n");
            }
        }
        out
    }

    fn counts(&self) -> (usize, usize) {
        let old = self.lines.iter().filter(|l| l.tag != LineTag::Add).count();
        let new = self.lines.iter().filter(|l| l.tag != LineTag::Remove).count();
        (old, new)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDiff {
    pub old_path: String,
    pub new_path: String,
    pub hunks: Vec<Hunk>,
}

impl FileDiff {
    /// The post-image path, or the pre-image path for deletions.
    pub fn path(&self) -> &str {
        if self.new_path == "/dev/null" {
            &self.old_path
        } else {
            &self.new_path
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiffError {
    /// 1-based line number of the offending header.
    MalformedHeader {
        line: usize,
        text: String,
    },
    Inconsistent {
        file: String,
        hunk: String,
        message: String,
    },
    StrayLine {
        line: usize,
        text: String,
    },
}

impl fmt::Display for DiffError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiffError::MalformedHeader { line, text } => {
                write!(f, "malformed diff header at line {line}: {text:?}")
            }
            DiffError::Inconsistent { file, hunk, message } => {
                write!(f, "hunk `{hunk}` in {file}: {message}")
            }
            DiffError::StrayLine { line, text } => {
                write!(f, "line {line} is outside any hunk: {text:?}")
            }
        }
    }
}

impl core::error::Error for DiffError {}

fn strip_path(raw: &str) -> String {
    let p = raw.split('\t').next().unwrap_or("").trim_end();
    let p = p.strip_prefix("a/").or_else(|| p.strip_prefix("b/")).unwrap_or(p);
    p.to_string()
}

fn parse_range(s: &str) -> Option<(usize, usize)> {
    match s.split_once(',') {
        Some((start, len)) => Some((start.parse().ok()?, len.parse().ok()?)),
        None => Some((s.parse().ok()?, 1)),
    }
}

/// `@@ -a[,b] +c[,d] @@[section]`
fn parse_hunk_header(line: &str) -> Option<(usize, usize, usize, usize, String)> {
    let rest = line.strip_prefix("@@ -")?;
    let (ranges, section) = rest.split_once(" @@")?;
    let (old, new) = ranges.split_once(" +")?;
    let (old_start, old_len) = parse_range(old)?;
    let (new_start, new_len) = parse_range(new)?;
    Some((old_start, old_len, new_start, new_len, section.to_string()))
}

fn is_file_header(lines: &[&str], i: usize) -> bool {
    lines[i].starts_with("--- ") && lines.get(i + 1).is_some_and(|l| l.starts_with("+++ "))
}

/// Parses `diff_text` as a sequence of unified diffs. Git extended headers
/// (`diff --git`, `index`, mode lines, `Binary files ...`) are skipped.
pub fn parse_unified_diff(diff_text: &str) -> Result<Vec<FileDiff>, DiffError> {
    let mut lines: Vec<&str> = diff_text.split('\n').collect();
    if lines.last() == Some(&"") {
        lines.pop();
    }
    let mut files: Vec<FileDiff> = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        if is_file_header(&lines, i) {
            files.push(FileDiff {
                old_path: strip_path(&line[4..]),
                new_path: strip_path(&lines[i + 1][4..]),
                hunks: Vec::new(),
            });
            i += 2;
            continue;
        }
        if line.starts_with("@@") {
            let Some(file) = files.last_mut() else {
                return Err(DiffError::MalformedHeader { line: i + 1, text: line.to_string() });
            };
            let Some((old_start, old_len, new_start, new_len, section)) = parse_hunk_header(line) else {
                return Err(DiffError::MalformedHeader { line: i + 1, text: line.to_string() });
            };
            let mut hunk = Hunk { old_start, old_len, new_start, new_len, section, lines: Vec::new() };
            let inconsistent = |hunk: &Hunk, file: &FileDiff, message: String| DiffError::Inconsistent {
                file: file.path().to_string(),
                hunk: hunk.header(),
                message,
            };
            i += 1;
            loop {
                let (old_seen, new_seen) = hunk.counts();
                if old_seen > old_len || new_seen > new_len {
                    let msg = format!("body has {old_seen} old-side and {new_seen} new-side lines");
                    return Err(inconsistent(&hunk, file, msg));
                }
                let done = old_seen == old_len && new_seen == new_len;
                let next = lines.get(i).copied();
                if let Some(marker) = next.filter(|l| l.starts_with('\\')) {
                    let Some(last) = hunk.lines.last_mut() else {
                        return Err(DiffError::StrayLine { line: i + 1, text: marker.to_string() });
                    };
                    last.no_newline = true;
                    i += 1;
                    continue;
                }
                if done {
                    break;
                }
                let Some(body) = next else {
                    let msg = format!(
                        "declares {old_len} old-side and {new_len} new-side lines, body ends after {old_seen} and {new_seen}"
                    );
                    return Err(inconsistent(&hunk, file, msg));
                };
                let (tag, text) = match body.chars().next() {
                    None => (LineTag::Context, ""),
                    Some(' ') => (LineTag::Context, &body[1..]),
                    Some('+') => (LineTag::Add, &body[1..]),
                    Some('-') => (LineTag::Remove, &body[1..]),
                    Some(_) => {
                        let msg = format!(
                            "declares {old_len} old-side and {new_len} new-side lines, body ends after {old_seen} and {new_seen}"
                        );
                        return Err(inconsistent(&hunk, file, msg));
                    }
                };
                hunk.lines.push(HunkLine { tag, text: text.to_string(), no_newline: false });
                i += 1;
            }
            // A body line right after a satisfied hunk means the header undercounts.
            if let Some(next) = lines.get(i) {
                if matches!(next.chars().next(), Some('+' | '-' | ' ')) && !is_file_header(&lines, i) {
                    let msg = format!(
                        "declares {} old-side and {} new-side lines but the body continues",
                        hunk.old_len, hunk.new_len
                    );
                    return Err(inconsistent(&hunk, file, msg));
                }
            }
            file.hunks.push(hunk);
            continue;
        }
        if !files.is_empty() && matches!(line.chars().next(), Some('+' | '-')) {
            return Err(DiffError::StrayLine { line: i + 1, text: line.to_string() });
        }
        i += 1;
    }
    Ok(files)
}
