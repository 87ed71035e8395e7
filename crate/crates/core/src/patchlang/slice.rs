//! Slicing hunks into normalized fix actions.
//!
//! Each added or removed line is lexed. Comment-only and blank lines carry
//! no tokens and vanish. A line whose tokens also appear as a whole line on
//! the other side of the same hunk is cosmetic (reformatting, a move) and is
//! dropped. The remaining lines of each side are joined into statements: a
//! statement ends at a line whose parentheses are balanced and whose last
//! token is `;`, `{`, `}` or `:`, or at a preprocessor line, or where the
//! run of changed lines ends. Statements that appear on both sides are
//! dropped as well.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::diff::{parse_unified_diff, DiffError, FileDiff, Hunk, LineTag};
use super::lex::{CodeToken, Lexer};
use crate::corpus::Commit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Add,
    Remove,
}

/// Where an action came from; `line` is the post-image line number for
/// additions and the pre-image line number for removals.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionSource {
    pub commit: String,
    pub file: String,
    pub line: usize,
}

/// Start of a new source line inside a multi-line action or template.
/// `indent` is relative to the first line's indentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineBreak {
    pub at: usize,
    pub indent: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixAction {
    pub kind: ActionKind,
    pub tokens: Vec<CodeToken>,
    pub source: ActionSource,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub layout: Vec<LineBreak>,
}

struct LexedLine {
    tag: LineTag,
    tokens: Vec<CodeToken>,
    indent: String,
    number: usize,
}

fn leading_ws(s: &str) -> &str {
    &s[..s.len() - s.trim_start().len()]
}

fn lex_hunk(hunk: &Hunk) -> Vec<LexedLine> {
    let mut old_lexer = Lexer::new();
    let mut new_lexer = Lexer::new();
    let mut old_no = hunk.old_start;
    let mut new_no = hunk.new_start;
    let mut out = Vec::with_capacity(hunk.lines.len());
    for l in &hunk.lines {
        let (tokens, number) = match l.tag {
            LineTag::Context => {
                let t = old_lexer.lex_line(&l.text);
                new_lexer.lex_line(&l.text);
                old_no += 1;
                new_no += 1;
                (t, new_no - 1)
            }
            LineTag::Remove => {
                old_no += 1;
                (old_lexer.lex_line(&l.text), old_no - 1)
            }
            LineTag::Add => {
                new_no += 1;
                (new_lexer.lex_line(&l.text), new_no - 1)
            }
        };
        out.push(LexedLine { tag: l.tag, tokens, indent: leading_ws(&l.text).to_string(), number });
    }
    out
}

fn completes_statement(tokens: &[CodeToken], depth: i64) -> bool {
    if tokens.first().is_some_and(|t| t.is_punct("#")) {
        return true;
    }
    depth <= 0
        && tokens.last().is_some_and(|t| t.is_punct(";") || t.is_punct("{") || t.is_punct("}") || t.is_punct(":"))
}

fn paren_delta(tokens: &[CodeToken]) -> i64 {
    tokens
        .iter()
        .map(|t| {
            if t.is_punct("(") {
                1
            } else if t.is_punct(")") {
                -1
            } else {
                0
            }
        })
        .sum()
}

/// (position of first line in hunk, action)
type Positioned = (usize, FixAction);

fn merge_statements(
    lines: &[(usize, &LexedLine)],
    kind: ActionKind,
    commit: &str,
    file: &str,
    out: &mut Vec<Positioned>,
) {
    let mut pending: Option<(usize, FixAction, i64, String)> = None;
    for &(pos, line) in lines {
        match pending.as_mut() {
            None => {
                let action = FixAction {
                    kind,
                    tokens: line.tokens.clone(),
                    source: ActionSource { commit: commit.to_string(), file: file.to_string(), line: line.number },
                    layout: Vec::new(),
                };
                pending = Some((pos, action, 0, line.indent.clone()));
            }
            Some((_, action, _, base_indent)) => {
                let indent = line.indent.strip_prefix(base_indent.as_str()).unwrap_or(&line.indent);
                action.layout.push(LineBreak { at: action.tokens.len(), indent: indent.to_string() });
                action.tokens.extend(line.tokens.iter().cloned());
            }
        }
        let (_, _, depth, _) = pending.as_mut().expect("just set");
        *depth += paren_delta(&line.tokens);
        if completes_statement(&line.tokens, *depth) {
            let (p, a, _, _) = pending.take().expect("just set");
            out.push((p, a));
        }
    }
    if let Some((p, a, _, _)) = pending {
        out.push((p, a));
    }
}

/// Fix actions of one hunk, in hunk order.
pub fn slice_hunk(commit: &str, file: &str, hunk: &Hunk) -> Vec<FixAction> {
    let lexed = lex_hunk(hunk);
    let side_set = |tag| -> BTreeSet<&[CodeToken]> {
        lexed.iter().filter(|l| l.tag == tag && !l.tokens.is_empty()).map(|l| l.tokens.as_slice()).collect()
    };
    let added = side_set(LineTag::Add);
    let removed = side_set(LineTag::Remove);

    let mut statements: Vec<Positioned> = Vec::new();
    let mut run_start = 0;
    while run_start < lexed.len() {
        if lexed[run_start].tag == LineTag::Context {
            run_start += 1;
            continue;
        }
        let mut run_end = run_start;
        while run_end < lexed.len() && lexed[run_end].tag != LineTag::Context {
            run_end += 1;
        }
        for (tag, kind, other) in
            [(LineTag::Remove, ActionKind::Remove, &added), (LineTag::Add, ActionKind::Add, &removed)]
        {
            let kept: Vec<(usize, &LexedLine)> = (run_start..run_end)
                .map(|p| (p, &lexed[p]))
                .filter(|(_, l)| l.tag == tag && !l.tokens.is_empty() && !other.contains(l.tokens.as_slice()))
                .collect();
            merge_statements(&kept, kind, commit, file, &mut statements);
        }
        run_start = run_end;
    }

    let stmt_set = |kind| -> BTreeSet<Vec<CodeToken>> {
        statements.iter().filter(|(_, a)| a.kind == kind).map(|(_, a)| a.tokens.clone()).collect()
    };
    let added_stmts = stmt_set(ActionKind::Add);
    let removed_stmts = stmt_set(ActionKind::Remove);
    statements.retain(|(_, a)| !(added_stmts.contains(&a.tokens) && removed_stmts.contains(&a.tokens)));
    statements.sort_by_key(|(p, _)| *p);
    statements.into_iter().map(|(_, a)| a).collect()
}

/// Fix actions of every hunk of one file diff.
pub fn slice_fix_actions(commit: &str, file: &FileDiff) -> Vec<FixAction> {
    file.hunks.iter().flat_map(|h| slice_hunk(commit, file.path(), h)).collect()
}

/// Parses a commit's diff and slices every file.
pub fn slice_commit(commit: &Commit) -> Result<Vec<FixAction>, DiffError> {
    Ok(parse_unified_diff(&commit.diff_text)?.iter().flat_map(|f| slice_fix_actions(&commit.hash, f)).collect())
}
