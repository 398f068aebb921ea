//! Recursive-descent parser for the clause language.
//!
//! ```text
//! file    := clause*
//! clause  := atom ":-" literal (("," | "∧") literal)* "."
//! literal := "Not" "(" atom ")" | atom
//! atom    := Ident "(" Ident ("," Ident)* ")"
//! ```
//!
//! `#` and `%` start a comment that runs to the end of the line.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::ast::{Clause, Literal, PredicateKind, RuleSet};
use crate::registry::PredicateRegistry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: unknown predicate `{name}`")]
    UnknownPredicate { pos: Pos, name: String },
    #[error("{pos}: `{name}` takes {expected} argument(s), found {found}")]
    ArityMismatch { pos: Pos, name: String, expected: usize, found: usize },
    #[error("{pos}: clause head `{name}` is not an action predicate")]
    NonActionHead { pos: Pos, name: String },
    #[error("{pos}: head variable `{var}` does not occur in the body")]
    UnboundHeadVariable { pos: Pos, var: String },
    #[error("{pos}: action literal `{name}` must only mention head variables")]
    ActionOnBodyVariable { pos: Pos, name: String },
    #[error("{pos}: variable `{var}` needs a positive background literal")]
    UnsafeVariable { pos: Pos, var: String },
}

impl RuleError {
    pub fn pos(&self) -> Pos {
        match self {
            RuleError::Syntax { pos, .. }
            | RuleError::UnknownPredicate { pos, .. }
            | RuleError::ArityMismatch { pos, .. }
            | RuleError::NonActionHead { pos, .. }
            | RuleError::UnboundHeadVariable { pos, .. }
            | RuleError::ActionOnBodyVariable { pos, .. }
            | RuleError::UnsafeVariable { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Turnstile,
    Dot,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Turnstile => f.write_str("`:-`"),
            Tok::Dot => f.write_str("`.`"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, RuleError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut pos = Pos { line: 1, col: 1 };

    fn bump(pos: &mut Pos, c: char) {
        if c == '\n' {
            pos.line += 1;
            pos.col = 1;
        } else {
            pos.col += 1;
        }
    }

    while let Some(&c) = chars.peek() {
        let start = pos;
        match c {
            '#' | '%' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    bump(&mut pos, c);
                }
            }
            c if c.is_whitespace() => {
                chars.next();
                bump(&mut pos, c);
            }
            '(' | ')' | ',' | '.' | '∧' => {
                chars.next();
                bump(&mut pos, c);
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '.' => Tok::Dot,
                    _ => Tok::Comma,
                };
                out.push((tok, start));
            }
            ':' => {
                chars.next();
                bump(&mut pos, c);
                if chars.peek() == Some(&'-') {
                    chars.next();
                    bump(&mut pos, '-');
                    out.push((Tok::Turnstile, start));
                } else {
                    return Err(RuleError::Syntax { pos: start, msg: "expected `:-`".into() });
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        ident.push(c);
                        chars.next();
                        bump(&mut pos, c);
                    } else {
                        break;
                    }
                }
                out.push((Tok::Ident(ident), start));
            }
            other => {
                return Err(RuleError::Syntax {
                    pos: start,
                    msg: format!("unexpected character {other:?}"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    end: Pos,
}

struct RawLiteral {
    lit: Literal,
    pos: Pos,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.at).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<(Tok, Pos)> {
        let t = self.toks.get(self.at).cloned();
        self.at += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<Pos, RuleError> {
        let pos = self.pos();
        match self.next() {
            Some((t, p)) if t == want => Ok(p),
            Some((t, p)) => Err(RuleError::Syntax { pos: p, msg: format!("expected {want}, found {t}") }),
            None => Err(RuleError::Syntax { pos, msg: format!("expected {want}, found end of input") }),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), RuleError> {
        let pos = self.pos();
        match self.next() {
            Some((Tok::Ident(s), p)) => {
                if !s.starts_with(|c: char| c.is_ascii_uppercase()) {
                    return Err(RuleError::Syntax {
                        pos: p,
                        msg: format!("{what} `{s}` must start with an uppercase letter"),
                    });
                }
                Ok((s, p))
            }
            Some((t, p)) => Err(RuleError::Syntax { pos: p, msg: format!("expected {what}, found {t}") }),
            None => Err(RuleError::Syntax { pos, msg: format!("expected {what}, found end of input") }),
        }
    }

    fn atom(&mut self) -> Result<RawLiteral, RuleError> {
        let (name, pos) = self.ident("predicate")?;
        if name == "Not" {
            return Err(RuleError::Syntax { pos, msg: "`Not` is not a predicate here".into() });
        }
        self.expect(Tok::LParen)?;
        let mut args = vec![self.ident("variable")?.0];
        while self.peek() == Some(&Tok::Comma) {
            self.next();
            args.push(self.ident("variable")?.0);
        }
        self.expect(Tok::RParen)?;
        Ok(RawLiteral { lit: Literal { predicate: name, args, negated: false }, pos })
    }

    fn literal(&mut self) -> Result<RawLiteral, RuleError> {
        if let Some(Tok::Ident(s)) = self.peek() {
            if s == "Not" {
                let pos = self.pos();
                self.next();
                self.expect(Tok::LParen)?;
                let mut inner = self.atom()?;
                self.expect(Tok::RParen)?;
                inner.lit.negated = true;
                inner.pos = pos;
                return Ok(inner);
            }
        }
        self.atom()
    }

    fn clause(&mut self) -> Result<(RawLiteral, Vec<RawLiteral>, Pos), RuleError> {
        let start = self.pos();
        if let Some(Tok::Ident(s)) = self.peek() {
            if s == "Not" {
                return Err(RuleError::Syntax { pos: start, msg: "clause head cannot be negated".into() });
            }
        }
        let head = self.atom()?;
        self.expect(Tok::Turnstile)?;
        let mut body = vec![self.literal()?];
        loop {
            match self.peek() {
                Some(Tok::Comma) => {
                    self.next();
                    body.push(self.literal()?);
                }
                Some(Tok::Dot) => {
                    self.next();
                    break;
                }
                Some(t) => {
                    let t = t.clone();
                    return Err(RuleError::Syntax {
                        pos: self.pos(),
                        msg: format!("expected `,` or `.`, found {t}"),
                    });
                }
                None => {
                    return Err(RuleError::Syntax {
                        pos: self.pos(),
                        msg: "unterminated clause, expected `.`".into(),
                    })
                }
            }
        }
        Ok((head, body, start))
    }
}

fn check_literal(raw: &RawLiteral, registry: &PredicateRegistry) -> Result<PredicateKind, RuleError> {
    let decl = registry.get(&raw.lit.predicate).ok_or_else(|| RuleError::UnknownPredicate {
        pos: raw.pos,
        name: raw.lit.predicate.clone(),
    })?;
    if decl.arity != raw.lit.args.len() {
        return Err(RuleError::ArityMismatch {
            pos: raw.pos,
            name: decl.name.clone(),
            expected: decl.arity,
            found: raw.lit.args.len(),
        });
    }
    Ok(decl.kind)
}

fn validate(
    head: &RawLiteral,
    body: &[RawLiteral],
    pos: Pos,
    registry: &PredicateRegistry,
) -> Result<(), RuleError> {
    if check_literal(head, registry)? != PredicateKind::Action {
        return Err(RuleError::NonActionHead { pos: head.pos, name: head.lit.predicate.clone() });
    }
    let mut kinds = Vec::with_capacity(body.len());
    for raw in body {
        kinds.push(check_literal(raw, registry)?);
    }

    let head_vars: BTreeSet<&str> = head.lit.args.iter().map(String::as_str).collect();
    let body_vars: BTreeSet<&str> =
        body.iter().flat_map(|r| r.lit.args.iter().map(String::as_str)).collect();
    if let Some(v) = head.lit.args.iter().find(|v| !body_vars.contains(v.as_str())) {
        return Err(RuleError::UnboundHeadVariable { pos, var: v.clone() });
    }

    for (raw, kind) in body.iter().zip(&kinds) {
        if *kind == PredicateKind::Action && raw.lit.args.iter().any(|a| !head_vars.contains(a.as_str())) {
            return Err(RuleError::ActionOnBodyVariable { pos: raw.pos, name: raw.lit.predicate.clone() });
        }
    }

    // Body-only variables must be bound by some positive background literal,
    // so all-false padding slots can never witness a clause.
    let bound: BTreeSet<&str> = body
        .iter()
        .zip(&kinds)
        .filter(|(r, k)| !r.lit.negated && **k != PredicateKind::Action)
        .flat_map(|(r, _)| r.lit.args.iter().map(String::as_str))
        .collect();
    for v in body_vars.difference(&head_vars) {
        if !bound.contains(v) {
            return Err(RuleError::UnsafeVariable { pos, var: v.to_string() });
        }
    }
    Ok(())
}

/// Parse clause text against a predicate registry, preserving clause order.
pub fn parse_rules(text: &str, registry: Arc<PredicateRegistry>) -> Result<RuleSet, RuleError> {
    let toks = lex(text)?;
    let end = {
        let lines = text.split('\n').count();
        let col = text.rsplit('\n').next().map(|l| l.chars().count()).unwrap_or(0) + 1;
        Pos { line: lines, col }
    };
    let mut parser = Parser { toks, at: 0, end };
    let mut clauses = Vec::new();
    while parser.peek().is_some() {
        let first_tok = parser.at;
        let (head, body, pos) = parser.clause()?;
        validate(&head, &body, pos, &registry)?;
        let clause = Clause::new(head.lit, body.into_iter().map(|r| r.lit).collect());
        let source_text = source_slice(text, &parser.toks[first_tok..parser.at]);
        clauses.push(Clause { source_text, ..clause });
    }
    Ok(RuleSet { clauses, registry })
}

fn source_slice(text: &str, toks: &[(Tok, Pos)]) -> String {
    let (Some((_, first)), Some((_, last))) = (toks.first(), toks.last()) else {
        return String::new();
    };
    let lines: Vec<&str> = text.split('\n').collect();
    let mut out = String::new();
    for line in first.line..=last.line {
        let l = lines.get(line - 1).copied().unwrap_or("");
        let from = if line == first.line { first.col - 1 } else { 0 };
        let to = if line == last.line { last.col } else { l.chars().count() };
        let piece: String = l.chars().skip(from).take(to.saturating_sub(from)).collect();
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(piece.trim_end());
    }
    out
}
