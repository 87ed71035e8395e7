//! Unified diffs to fix actions to ranked, generalized fix templates.

pub mod cluster;
pub mod diff;
pub mod lex;
pub mod slice;
pub mod template;

pub use cluster::cluster_and_rank;
pub use diff::{parse_unified_diff, DiffError, FileDiff, Hunk, HunkLine, LineTag};
pub use lex::{lex, CodeToken, Lexer, TokenKind};
pub use slice::{slice_commit, slice_fix_actions, slice_hunk, ActionKind, ActionSource, FixAction, LineBreak};
pub use template::{anti_unify, matches, render_template, FixTemplate, MetaSort, MetaVar, PatternElem};
