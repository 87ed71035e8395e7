//! Fix templates: anti-unification of fix actions, template matching and
//! SmPL-flavored rendering.
//!
//! Alignment is positional over *units*: a unit is a single token, or a
//! balanced `( ... )` group whose contents are split at top-level commas
//! into arguments. Two sequences align when they have the same number of
//! units and every position aligns:
//!
//! * equal tokens stay literal;
//! * two different identifiers become an identifier metavariable (`X0`,
//!   `X1`, ...), unless either one sits in call position (directly before a
//!   group), in which case alignment fails;
//! * two groups with the same number of arguments align argument by
//!   argument; an argument pair that does not align token-wise becomes an
//!   expression metavariable (`E0`, `E1`, ...);
//! * anything else fails.
//!
//! The same pair of differing tokens (or arguments) always maps to the same
//! metavariable.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use super::lex::{CodeToken, TokenKind};
use super::slice::{ActionKind, ActionSource, FixAction, LineBreak};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetaSort {
    Identifier,
    Expression,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MetaVar {
    pub name: String,
    pub sort: MetaSort,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternElem {
    Lit(CodeToken),
    Meta(MetaVar),
}

impl PatternElem {
    fn punct(&self) -> Option<&str> {
        match self {
            PatternElem::Lit(t) if t.kind == TokenKind::Punct => Some(&t.text),
            _ => None,
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        self.punct() == Some(p)
    }

    fn is_ident_like(&self) -> bool {
        match self {
            PatternElem::Lit(t) => t.kind == TokenKind::Identifier,
            PatternElem::Meta(m) => m.sort == MetaSort::Identifier,
        }
    }

    fn text(&self) -> &str {
        match self {
            PatternElem::Lit(t) => &t.text,
            PatternElem::Meta(m) => &m.name,
        }
    }
}

/// A generalized fix action. `support` is the number of distinct commits
/// among `instances`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixTemplate {
    pub kind: ActionKind,
    pub pattern: Vec<PatternElem>,
    pub metavars: Vec<MetaVar>,
    pub support: usize,
    pub instances: Vec<ActionSource>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub layout: Vec<LineBreak>,
}

fn distinct_commits(instances: &[ActionSource]) -> usize {
    instances.iter().map(|s| s.commit.as_str()).collect::<BTreeSet<_>>().len()
}

impl FixTemplate {
    /// The action itself as a template without metavariables.
    pub fn from_action(a: &FixAction) -> Self {
        FixTemplate {
            kind: a.kind,
            pattern: a.tokens.iter().cloned().map(PatternElem::Lit).collect(),
            metavars: Vec::new(),
            support: 1,
            instances: alloc::vec![a.source.clone()],
            layout: a.layout.clone(),
        }
    }

    /// Anti-unifies this template (metavariables kept as opaque symbols)
    /// with `action`. The result covers both.
    pub fn absorb(&self, action: &FixAction) -> Option<FixTemplate> {
        if self.kind != action.kind {
            return None;
        }
        let other: Vec<PatternElem> = action.tokens.iter().cloned().map(PatternElem::Lit).collect();
        let (pattern, metavars, starts) = generalize(&self.pattern, &other)?;
        let layout = self
            .layout
            .iter()
            .filter_map(|br| {
                starts.iter().position(|&s| s == br.at).map(|at| LineBreak { at, indent: br.indent.clone() })
            })
            .collect();
        let mut instances = self.instances.clone();
        instances.push(action.source.clone());
        Some(FixTemplate {
            kind: self.kind,
            pattern,
            metavars,
            support: distinct_commits(&instances),
            instances,
            layout,
        })
    }

    pub fn render(&self) -> String {
        render_template(self)
    }
}

/// Most specific common generalization of two actions of the same kind, or
/// `None` when they do not unify.
pub fn anti_unify(a: &FixAction, b: &FixAction) -> Option<FixTemplate> {
    FixTemplate::from_action(a).absorb(b)
}

#[derive(Debug)]
enum Unit {
    Atom(usize),
    Group { open: usize, close: usize, args: Vec<Arg> },
}

#[derive(Debug)]
struct Arg {
    range: Range<usize>,
    units: Vec<Unit>,
}

fn find_close(elems: &[PatternElem], open: usize, end: usize) -> Option<usize> {
    let mut depth = 0i32;
    for (i, e) in elems.iter().enumerate().take(end).skip(open) {
        if e.is_punct("(") {
            depth += 1;
        } else if e.is_punct(")") {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

fn build_units(elems: &[PatternElem], range: Range<usize>) -> Vec<Unit> {
    let mut out = Vec::new();
    let mut i = range.start;
    while i < range.end {
        if elems[i].is_punct("(") {
            if let Some(close) = find_close(elems, i, range.end) {
                out.push(Unit::Group { open: i, close, args: split_args(elems, i + 1..close) });
                i = close + 1;
                continue;
            }
        }
        out.push(Unit::Atom(i));
        i += 1;
    }
    out
}

fn split_args(elems: &[PatternElem], range: Range<usize>) -> Vec<Arg> {
    if range.is_empty() {
        return Vec::new();
    }
    let mut args = Vec::new();
    let mut depth = 0i32;
    let mut start = range.start;
    for i in range.clone() {
        match elems[i].punct() {
            Some("(" | "[" | "{") => depth += 1,
            Some(")" | "]" | "}") => depth -= 1,
            Some(",") if depth == 0 => {
                args.push(Arg { range: start..i, units: build_units(elems, start..i) });
                start = i + 1;
            }
            _ => {}
        }
    }
    args.push(Arg { range: start..range.end, units: build_units(elems, start..range.end) });
    args
}

fn in_call_position(units: &[Unit], pos: usize, elems: &[PatternElem]) -> bool {
    match units.get(pos + 1) {
        Some(Unit::Group { .. }) => true,
        Some(Unit::Atom(i)) => elems[*i].is_punct("("),
        None => false,
    }
}

type ArgPair<'a> = (&'a [PatternElem], &'a [PatternElem]);

struct Generalizer<'a> {
    a: &'a [PatternElem],
    b: &'a [PatternElem],
    /// Emitted element and the index in `a` it starts at.
    out: Vec<(PatternElem, usize)>,
    idents: Vec<((&'a PatternElem, &'a PatternElem), String)>,
    exprs: Vec<(ArgPair<'a>, String)>,
}

impl<'a> Generalizer<'a> {
    fn snapshot(&self) -> (usize, usize, usize) {
        (self.out.len(), self.idents.len(), self.exprs.len())
    }

    fn restore(&mut self, s: (usize, usize, usize)) {
        self.out.truncate(s.0);
        self.idents.truncate(s.1);
        self.exprs.truncate(s.2);
    }

    fn push_lit_from_a(&mut self, i: usize) {
        self.out.push((self.a[i].clone(), i));
    }

    fn ident_var(&mut self, i: usize, j: usize) {
        let key = (&self.a[i], &self.b[j]);
        let name = match self.idents.iter().find(|(k, _)| *k == key) {
            Some((_, n)) => n.clone(),
            None => {
                let n = format!("X{}", self.idents.len());
                self.idents.push((key, n.clone()));
                n
            }
        };
        self.out.push((PatternElem::Meta(MetaVar { name, sort: MetaSort::Identifier }), i));
    }

    fn expr_var(&mut self, ra: Range<usize>, rb: Range<usize>) {
        let start = ra.start;
        let key = (&self.a[ra], &self.b[rb]);
        let name = match self.exprs.iter().find(|(k, _)| *k == key) {
            Some((_, n)) => n.clone(),
            None => {
                let n = format!("E{}", self.exprs.len());
                self.exprs.push((key, n.clone()));
                n
            }
        };
        self.out.push((PatternElem::Meta(MetaVar { name, sort: MetaSort::Expression }), start));
    }

    fn align_seq(&mut self, ua: &[Unit], ub: &[Unit]) -> bool {
        if ua.len() != ub.len() {
            return false;
        }
        for (p, (x, y)) in ua.iter().zip(ub).enumerate() {
            let ok = match (x, y) {
                (Unit::Atom(i), Unit::Atom(j)) => {
                    let (ea, eb) = (&self.a[*i], &self.b[*j]);
                    if ea == eb && matches!(ea, PatternElem::Lit(_)) {
                        self.push_lit_from_a(*i);
                        true
                    } else if ea.is_ident_like()
                        && eb.is_ident_like()
                        && !in_call_position(ua, p, self.a)
                        && !in_call_position(ub, p, self.b)
                    {
                        self.ident_var(*i, *j);
                        true
                    } else {
                        false
                    }
                }
                (Unit::Group { open, close, args }, Unit::Group { args: args_b, .. }) if args.len() == args_b.len() => {
                    self.push_lit_from_a(*open);
                    for (k, (arg_a, arg_b)) in args.iter().zip(args_b).enumerate() {
                        if k > 0 {
                            self.push_lit_from_a(arg_a.range.start - 1);
                        }
                        if !self.align_arg(arg_a, arg_b) {
                            return false;
                        }
                    }
                    self.push_lit_from_a(*close);
                    true
                }
                _ => false,
            };
            if !ok {
                return false;
            }
        }
        true
    }

    fn align_arg(&mut self, arg_a: &Arg, arg_b: &Arg) -> bool {
        let snap = self.snapshot();
        if self.align_seq(&arg_a.units, &arg_b.units) {
            return true;
        }
        self.restore(snap);
        if arg_a.range.is_empty() || arg_b.range.is_empty() {
            return false;
        }
        self.expr_var(arg_a.range.clone(), arg_b.range.clone());
        true
    }
}

/// Pattern, declared metavariables (identifiers first, then expressions,
/// each in order of first occurrence) and, per pattern element, the index
/// in `a` where it starts.
type Generalized = (Vec<PatternElem>, Vec<MetaVar>, Vec<usize>);

fn generalize(a: &[PatternElem], b: &[PatternElem]) -> Option<Generalized> {
    let ua = build_units(a, 0..a.len());
    let ub = build_units(b, 0..b.len());
    let mut g = Generalizer { a, b, out: Vec::new(), idents: Vec::new(), exprs: Vec::new() };
    if !g.align_seq(&ua, &ub) {
        return None;
    }
    let metavars = g
        .idents
        .iter()
        .map(|(_, n)| MetaVar { name: n.clone(), sort: MetaSort::Identifier })
        .chain(g.exprs.iter().map(|(_, n)| MetaVar { name: n.clone(), sort: MetaSort::Expression }))
        .collect();
    let (pattern, starts) = g.out.into_iter().unzip();
    Some((pattern, metavars, starts))
}

fn balanced_without_top_comma(tokens: &[CodeToken]) -> bool {
    let mut depth = 0i32;
    for t in tokens {
        if t.kind != TokenKind::Punct {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => {
                depth -= 1;
                if depth < 0 {
                    return false;
                }
            }
            "," if depth == 0 => return false,
            _ => {}
        }
    }
    depth == 0
}

/// True iff some substitution (identifier metavariable ↦ one identifier
/// token, expression metavariable ↦ a nonempty balanced token run without a
/// top-level comma, consistent across repeats) turns the pattern into
/// exactly `action.tokens`.
pub fn matches(t: &FixTemplate, action: &FixAction) -> bool {
    fn go<'t>(pat: &[PatternElem], toks: &'t [CodeToken], binds: &mut Vec<(String, &'t [CodeToken])>) -> bool {
        let Some((first, rest)) = pat.split_first() else {
            return toks.is_empty();
        };
        match first {
            PatternElem::Lit(tok) => toks.first() == Some(tok) && go(rest, &toks[1..], binds),
            PatternElem::Meta(m) => {
                if let Some((_, bound)) = binds.iter().find(|(n, _)| *n == m.name) {
                    let bound = *bound;
                    return toks.starts_with(bound) && go(rest, &toks[bound.len()..], binds);
                }
                let max_len = match m.sort {
                    MetaSort::Identifier => {
                        if toks.first().map(|t| t.kind) != Some(TokenKind::Identifier) {
                            return false;
                        }
                        1
                    }
                    MetaSort::Expression => toks.len(),
                };
                for len in 1..=max_len {
                    let cand = &toks[..len];
                    if m.sort == MetaSort::Expression && !balanced_without_top_comma(cand) {
                        continue;
                    }
                    binds.push((m.name.clone(), cand));
                    if go(rest, &toks[len..], binds) {
                        return true;
                    }
                    binds.pop();
                }
                false
            }
        }
    }
    t.kind == action.kind && go(&t.pattern, &action.tokens, &mut Vec::new())
}

const NO_SPACE_AFTER: [&str; 7] = ["(", "[", ".", "->", "!", "~", "#"];
const NO_SPACE_BEFORE: [&str; 6] = [")", "]", ";", ",", ".", "->"];
const MAYBE_UNARY: [&str; 6] = ["-", "+", "*", "&", "++", "--"];

fn is_closer(e: &PatternElem) -> bool {
    matches!(e.punct(), Some(")" | "]"))
}

fn is_word(e: &PatternElem) -> bool {
    e.punct().is_none()
}

fn is_keyword(e: &PatternElem) -> bool {
    matches!(e, PatternElem::Lit(t) if t.kind == TokenKind::Keyword)
}

fn is_unary(line: &[PatternElem], q: usize) -> bool {
    if q == 0 {
        return true;
    }
    let prev = &line[q - 1];
    (prev.punct().is_some() && !is_closer(prev)) || is_keyword(prev)
}

fn space_before(line: &[PatternElem], q: usize) -> bool {
    let prev = &line[q - 1];
    let cur = &line[q];
    if let Some(p) = prev.punct() {
        if NO_SPACE_AFTER.contains(&p) {
            return false;
        }
        if MAYBE_UNARY.contains(&p) && is_unary(line, q - 1) {
            return false;
        }
    }
    if let Some(c) = cur.punct() {
        if NO_SPACE_BEFORE.contains(&c) {
            return false;
        }
        let glued_to_prev = (is_word(prev) && !is_keyword(prev)) || is_closer(prev);
        match c {
            "(" => return !(glued_to_prev || prev.text() == "sizeof"),
            "[" | "++" | "--" => return !glued_to_prev,
            ":" if q + 1 == line.len() => return false,
            _ => {}
        }
    }
    true
}

fn render_line(line: &[PatternElem]) -> String {
    let mut s = String::new();
    for q in 0..line.len() {
        if q > 0 && space_before(line, q) {
            s.push(' ');
        }
        s.push_str(line[q].text());
    }
    s
}

/// SmPL-flavored text: a `@@ ... @@` header declaring the metavariables,
/// then one `+ ` (or `- `) prefixed line per source line of the pattern.
pub fn render_template(t: &FixTemplate) -> String {
    let mut out = String::from("@@");
    for m in &t.metavars {
        let sort = match m.sort {
            MetaSort::Identifier => "identifier",
            MetaSort::Expression => "expression",
        };
        out.push_str(&format!(" {sort} {};", m.name));
    }
    out.push_str(" @@");
    let prefix = match t.kind {
        ActionKind::Add => "+ ",
        ActionKind::Remove => "- ",
    };
    let mut start = 0;
    let mut indent = "";
    let mut breaks = t.layout.iter().filter(|b| b.at > 0 && b.at < t.pattern.len()).peekable();
    loop {
        let end = match breaks.peek() {
            Some(b) if b.at > start => b.at,
            Some(_) => {
                breaks.next();
                continue;
            }
            None => t.pattern.len(),
        };
        out.push('\n');
        out.push_str(prefix);
        out.push_str(indent);
        out.push_str(&render_line(&t.pattern[start..end]));
        if end == t.pattern.len() {
            break;
        }
        indent = &breaks.next().expect("peeked").indent;
        start = end;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patchlang::lex::lex;
    use alloc::string::ToString;
    use alloc::vec;

    fn action(kind: ActionKind, commit: &str, src: &str) -> FixAction {
        FixAction {
            kind,
            tokens: lex(src),
            source: ActionSource { commit: commit.to_string(), file: "f.c".into(), line: 1 },
            layout: Vec::new(),
        }
    }

    fn add(commit: &str, src: &str) -> FixAction {
        action(ActionKind::Add, commit, src)
    }

    fn body(t: &FixTemplate) -> String {
        t.pattern.iter().map(PatternElem::text).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn null_check_generalizes_identifier() {
        let a = add("aaaaaaa", "if (!rule) return -ENOMEM;");
        let b = add("bbbbbbb", "if (!fck) return -ENOMEM;");
        let t = anti_unify(&a, &b).unwrap();
        assert_eq!(body(&t), "if ( ! X0 ) return - ENOMEM ;");
        assert_eq!(t.metavars, vec![MetaVar { name: "X0".into(), sort: MetaSort::Identifier }]);
        assert_eq!(t.support, 2);
        assert!(matches(&t, &a) && matches(&t, &b));
    }

    #[test]
    fn self_unification_is_identity() {
        let a = add("aaaaaaa", "p = kmalloc(sz, GFP_KERNEL);");
        let t = anti_unify(&a, &a).unwrap();
        assert!(t.metavars.is_empty());
        assert_eq!(t.pattern, a.tokens.iter().cloned().map(PatternElem::Lit).collect::<Vec<_>>());
        assert_eq!(t.support, 1);
    }

    #[test]
    fn call_position_is_never_abstracted() {
        let a = add("aaaaaaa", "p = kmalloc(sz, GFP_KERNEL)");
        let b = add("bbbbbbb", "p = kzalloc(sz, GFP_KERNEL)");
        assert!(anti_unify(&a, &b).is_none());
    }

    #[test]
    fn arguments_become_expressions() {
        let a = add("aaaaaaa", "buf = kmalloc(sizeof(*buf), GFP_KERNEL);");
        let b = add("bbbbbbb", "ctx = kmalloc(len + 1, GFP_KERNEL);");
        let t = anti_unify(&a, &b).unwrap();
        assert_eq!(body(&t), "X0 = kmalloc ( E0 , GFP_KERNEL ) ;");
        assert!(matches(&t, &a) && matches(&t, &b));
        assert_eq!(t.render(), "@@ identifier X0; expression E0; @@\n+ X0 = kmalloc(E0, GFP_KERNEL);");
    }

    #[test]
    fn repeated_pairs_share_a_metavariable() {
        let a = add("aaaaaaa", "a = a + b;");
        let b = add("bbbbbbb", "c = c + d;");
        let t = anti_unify(&a, &b).unwrap();
        assert_eq!(body(&t), "X0 = X0 + X1 ;");
        assert!(!matches(&t, &add("ccccccc", "c = d + d;")));
        assert!(matches(&t, &add("ccccccc", "e = e + e;")));
    }

    #[test]
    fn other_mismatches_fail() {
        assert!(anti_unify(&add("a", "x = 1;"), &add("b", "x = 2;")).is_none());
        assert!(anti_unify(&add("a", "return x;"), &add("b", "goto x;")).is_none());
        assert!(anti_unify(&add("a", "f(a, b);"), &add("b", "f(a);")).is_none());
        assert!(anti_unify(&add("a", "x;"), &action(ActionKind::Remove, "b", "x;")).is_none());
    }

    #[test]
    fn matches_contract() {
        let t = anti_unify(&add("a", "if (!rule) return -ENOMEM;"), &add("b", "if (!fck) return -ENOMEM;")).unwrap();
        assert!(matches(&t, &add("c", "if (!rule) return -ENOMEM;")));
        assert!(!matches(&t, &action(ActionKind::Remove, "c", "if (!rule) return -ENOMEM;")));
        assert!(!matches(&t, &add("c", "if (!rule) return -EINVAL;")));
        let lit = FixTemplate::from_action(&add("a", "return 0;"));
        assert!(matches(&lit, &add("z", "return 0;")));
    }

    #[test]
    fn rendering() {
        let mut a = add("a", "if (!rule) return -ENOMEM;");
        a.layout = vec![LineBreak { at: 5, indent: "\t".into() }];
        let b = add("b", "if (!fck) return -ENOMEM;");
        let t = anti_unify(&a, &b).unwrap();
        assert_eq!(render_template(&t), "@@ identifier X0; @@\n+ if (!X0)\n+ \treturn -ENOMEM;");
        let r = FixTemplate::from_action(&add("a", "return 0;"));
        assert_eq!(render_template(&r), "@@ @@\n+ return 0;");
        let rm = FixTemplate::from_action(&action(ActionKind::Remove, "a", "x->y[i]++;"));
        assert_eq!(render_template(&rm), "@@ @@\n- x->y[i]++;");
    }

    #[test]
    fn spacing_rules() {
        let r = |s: &str| render_line(&lex(s).into_iter().map(PatternElem::Lit).collect::<Vec<_>>());
        assert_eq!(r("p = kmalloc(sizeof(*p), GFP_KERNEL);"), "p = kmalloc(sizeof(*p), GFP_KERNEL);");
        assert_eq!(r("while (i < n) i++;"), "while (i < n) i++;");
        assert_eq!(r("a = b * c - -d;"), "a = b * c - -d;");
        assert_eq!(r("out:"), "out:");
    }
}
