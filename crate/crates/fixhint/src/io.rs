//! JSONL and git-log ingestion.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use fixhint_core::corpus::{parse_gitlog, BugReport, Commit, CorpusError};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// One value per nonblank line, with the 1-based line number.
fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(line).map_err(|e| Error::Line {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, value));
    }
    Ok(out)
}

/// Reports in file order. Rejects malformed lines, empty ids or short
/// descriptions, and duplicate ids, naming the offending line.
pub fn ingest_reports(path: &Path) -> Result<Vec<BugReport>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, r) in read_jsonl::<BugReport>(path)? {
        let bad = |e: CorpusError| Error::Line { path: path.to_path_buf(), line, message: e.to_string() };
        r.validate().map_err(bad)?;
        if !seen.insert(r.id.clone()) {
            return Err(bad(CorpusError::DuplicateId { id: r.id }));
        }
        out.push(r);
    }
    Ok(out)
}

pub fn ingest_commits(path: &Path) -> Result<Vec<Commit>> {
    let mut out = Vec::new();
    for (line, c) in read_jsonl::<Commit>(path)? {
        c.validate().map_err(|e| Error::Line { path: path.to_path_buf(), line, message: e.to_string() })?;
        out.push(c);
    }
    Ok(out)
}

pub fn ingest_gitlog(path: &Path) -> Result<Vec<Commit>> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    parse_gitlog(&text).map_err(|source| Error::Corpus { path: path.to_path_buf(), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Line {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

pub fn read_jsonl_values<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    Ok(read_jsonl(path)?.into_iter().map(|(_, v)| v).collect())
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).expect("serializable");
        buf.push(b'\n');
    }
    fs::write(path, buf).map_err(Error::io(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(Error::io(path))?;
    f.write_all(text.as_bytes()).map_err(Error::io(path))
}
