//! A small lexer for C-like source lines.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// C99 keywords, one per line.
pub const C99_KEYWORDS: &str = include_str!("../../resources/c99_keywords.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Identifier,
    Keyword,
    Literal,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CodeToken {
    pub kind: TokenKind,
    pub text: String,
}

impl CodeToken {
    pub fn new(kind: TokenKind, text: impl Into<String>) -> Self {
        CodeToken { kind, text: text.into() }
    }

    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punct && self.text == p
    }
}

pub fn is_c_keyword(word: &str) -> bool {
    C99_KEYWORDS.lines().any(|k| k.trim() == word)
}

const PUNCTS: [&str; 48] = [
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "*=", "/=", "%=", "+=",
    "-=", "&=", "^=", "|=", "##", "[", "]", "(", ")", "{", "}", ".", "&", "*", "+", "-", "~", "!", "/", "%", "<", ">",
    "^", "|", "?", ":", ";", "=", ",", "#",
];

/// Line-at-a-time lexer that remembers whether a `/* ... */` comment is
/// still open across lines.
#[derive(Debug, Clone, Default)]
pub struct Lexer {
    in_block_comment: bool,
}

impl Lexer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lex_line(&mut self, line: &str) -> Vec<CodeToken> {
        let mut out = Vec::new();
        let s = line;
        let b = s.as_bytes();
        let mut i = 0;
        while i < b.len() {
            if self.in_block_comment {
                match s[i..].find("*/") {
                    Some(end) => {
                        i += end + 2;
                        self.in_block_comment = false;
                    }
                    None => break,
                }
                continue;
            }
            let c = b[i];
            if c.is_ascii_whitespace() {
                i += 1;
            } else if s[i..].starts_with("//") {
                break;
            } else if s[i..].starts_with("/*") {
                self.in_block_comment = true;
                i += 2;
            } else if c.is_ascii_alphabetic() || c == b'_' {
                let start = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                let word = &s[start..i];
                let kind = if is_c_keyword(word) { TokenKind::Keyword } else { TokenKind::Identifier };
                out.push(CodeToken::new(kind, word));
            } else if c.is_ascii_digit() || (c == b'.' && b.get(i + 1).is_some_and(u8::is_ascii_digit)) {
                let start = i;
                while i < b.len() {
                    let d = b[i];
                    let exponent_sign = matches!(d, b'+' | b'-') && matches!(b[i - 1], b'e' | b'E' | b'p' | b'P');
                    if d.is_ascii_alphanumeric() || d == b'_' || d == b'.' || exponent_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.push(CodeToken::new(TokenKind::Literal, &s[start..i]));
            } else if c == b'"' || c == b'\'' {
                let start = i;
                i += 1;
                while i < b.len() && b[i] != c {
                    i += if b[i] == b'\\' { 2 } else { 1 };
                }
                i = (i + 1).min(b.len());
                out.push(CodeToken::new(TokenKind::Literal, &s[start..i]));
            } else if let Some(p) = PUNCTS.iter().find(|p| s[i..].starts_with(**p)) {
                out.push(CodeToken::new(TokenKind::Punct, *p));
                i += p.len();
            } else {
                // Anything else (non-ASCII, `@`, `$`, `\`) becomes a one-character literal.
                let ch = s[i..].chars().next().expect("in bounds");
                out.push(CodeToken::new(TokenKind::Literal, String::from(ch)));
                i += ch.len_utf8();
            }
        }
        out
    }
}

/// Lexes a single line with no comment carried in from earlier lines.
pub fn lex(line: &str) -> Vec<CodeToken> {
    Lexer::new().lex_line(line)
}
