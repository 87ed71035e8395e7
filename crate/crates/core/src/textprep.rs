//! Bug-report text to stemmed, stopword-free token sequences.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::BugReport;
use crate::porter;

/// English stopword list, one word per line.
pub const STOPWORDS_EN: &str = include_str!("../resources/stopwords_en.txt");

/// Preprocessed document: lowercase stems over `[a-z0-9_]`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn stopword_set() -> BTreeSet<&'static str> {
    STOPWORDS_EN.lines().map(str::trim).filter(|l| !l.is_empty()).collect()
}

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS_EN.lines().any(|l| l.trim() == token)
}

/// Splits on anything outside `[A-Za-z0-9_]` (including every non-ASCII
/// character), lowercases, and drops tokens shorter than two characters or
/// made only of digits.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .filter(|t| t.len() >= 2 && !t.bytes().all(|b| b.is_ascii_digit()))
        .map(str::to_ascii_lowercase)
        .collect()
}

pub fn remove_stopwords(tokens: Vec<String>) -> Vec<String> {
    let stop = stopword_set();
    tokens.into_iter().filter(|t| !stop.contains(t.as_str())).collect()
}

pub fn stem(token: &str) -> String {
    porter::stem(token)
}

/// Runs tokenize, stopword removal and stemming over the short description.
pub fn preprocess(report: &BugReport) -> TokenSeq {
    preprocess_text(&report.short_desc)
}

pub fn preprocess_text(text: &str) -> TokenSeq {
    let tokens = remove_stopwords(tokenize(text)).iter().map(|t| stem(t)).collect();
    TokenSeq { tokens }
}
