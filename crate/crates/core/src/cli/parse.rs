// SPDX-License-Identifier: Apache-2.0

//! A small SMT-LIB subset over strings: declarations, assertions built
//! from equations, regular membership, replacement and named transducers,
//! and an explicit state-table syntax for transducers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::automata::Regex;
use crate::transduce::Word;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
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
pub enum ParseError {
    #[error("{pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: unsupported: {what}")]
    Unsupported { pos: Pos, what: String },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Syntax { pos, .. } | ParseError::Unsupported { pos, .. } => *pos,
        }
    }
}

fn syntax<T>(pos: Pos, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Syntax {
        pos,
        msg: msg.into(),
    })
}

fn unsupported<T>(pos: Pos, what: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Unsupported {
        pos,
        what: what.into(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Sexp {
    Sym(String, Pos),
    Str(Vec<u32>, Pos),
    Num(u64, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Sym(_, p) | Sexp::Str(_, p) | Sexp::Num(_, p) | Sexp::List(_, p) => *p,
        }
    }

    fn sym(&self) -> Option<&str> {
        match self {
            Sexp::Sym(s, _) => Some(s),
            _ => None,
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl Lexer<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn skip_space(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while self.chars.peek().is_some_and(|c| *c != '\n') {
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn string(&mut self, start: Pos) -> Result<Vec<u32>, ParseError> {
        let mut raw = Vec::new();
        loop {
            match self.bump() {
                None => return syntax(start, "unterminated string literal"),
                Some('"') if self.chars.peek() == Some(&'"') => {
                    self.bump();
                    raw.push('"');
                }
                Some('"') => break,
                Some(c) => raw.push(c),
            }
        }
        unescape(&raw).ok_or(ParseError::Syntax {
            pos: start,
            msg: "bad \\u escape in string literal".into(),
        })
    }

    fn sexp(&mut self) -> Result<Option<Sexp>, ParseError> {
        self.skip_space();
        let pos = self.pos;
        let Some(&c) = self.chars.peek() else {
            return Ok(None);
        };
        match c {
            '(' => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_space();
                    match self.chars.peek() {
                        None => return syntax(pos, "unbalanced parenthesis"),
                        Some(')') => {
                            self.bump();
                            return Ok(Some(Sexp::List(items, pos)));
                        }
                        _ => items.push(self.sexp()?.expect("input remains")),
                    }
                }
            }
            ')' => syntax(pos, "unexpected ')'"),
            '"' => {
                self.bump();
                Ok(Some(Sexp::Str(self.string(pos)?, pos)))
            }
            '|' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return syntax(pos, "unterminated quoted symbol"),
                        Some('|') => return Ok(Some(Sexp::Sym(s, pos))),
                        Some(c) => s.push(c),
                    }
                }
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || "()\";|".contains(c) {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(Some(match s.parse::<u64>() {
                    Ok(n) => Sexp::Num(n, pos),
                    Err(_) => Sexp::Sym(s, pos),
                }))
            }
        }
    }
}

// `\u{h…}` and `\udddd` escapes; a backslash otherwise stands for itself.
fn unescape(raw: &[char]) -> Option<Vec<u32>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < raw.len() {
        if raw[i] == '\\' && raw.get(i + 1) == Some(&'u') {
            if raw.get(i + 2) == Some(&'{') {
                let end = raw[i + 3..].iter().position(|c| *c == '}')? + i + 3;
                let hex: String = raw[i + 3..end].iter().collect();
                if hex.is_empty() || hex.len() > 5 {
                    return None;
                }
                out.push(u32::from_str_radix(&hex, 16).ok()?);
                i = end + 1;
                continue;
            }
            if raw.len() >= i + 6 {
                let hex: String = raw[i + 2..i + 6].iter().collect();
                if let Ok(c) = u32::from_str_radix(&hex, 16) {
                    out.push(c);
                    i += 6;
                    continue;
                }
            }
        }
        out.push(raw[i] as u32);
        i += 1;
    }
    Some(out)
}

/// Renders a word as an SMT-LIB string literal.
pub fn quote(w: &[u32]) -> String {
    let mut s = String::from("\"");
    for c in w {
        match char::from_u32(*c) {
            Some('"') => s.push_str("\"\""),
            Some(ch) if (' '..='~').contains(&ch) && ch != '\\' => s.push(ch),
            _ => s.push_str(&format!("\\u{{{c:x}}}")),
        }
    }
    s.push('"');
    s
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StrTerm {
    Var(String),
    Lit(Word),
    Concat(Vec<StrTerm>),
    Replace {
        arg: Box<StrTerm>,
        pattern: Word,
        replacement: Word,
        all: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoolTerm {
    Const(bool),
    Eq(StrTerm, StrTerm),
    /// `lhs = T(arg)` for a defined transducer `T`.
    Transduce {
        lhs: StrTerm,
        name: String,
        arg: StrTerm,
    },
    InRe(StrTerm, Regex),
    Not(Box<BoolTerm>),
    And(Vec<BoolTerm>),
    Or(Vec<BoolTerm>),
}

/// One side of a transducer rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sym {
    Eps,
    Char(u32),
    /// Any character; on both sides, the same character.
    Any,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub from: String,
    pub input: Sym,
    pub output: Sym,
    pub to: String,
}

/// A transducer given by its state table; `T(x)` is any output of a run
/// on `x` from `init` to a state in `finals`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransducerDef {
    pub name: String,
    pub init: String,
    pub finals: BTreeSet<String>,
    pub rules: Vec<Rule>,
}

impl TransducerDef {
    pub fn states(&self) -> BTreeSet<&str> {
        std::iter::once(self.init.as_str())
            .chain(self.finals.iter().map(String::as_str))
            .chain(self.rules.iter().flat_map(|r| [r.from.as_str(), r.to.as_str()]))
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StrFormula {
    /// Declared string variables, in declaration order.
    pub vars: Vec<String>,
    pub transducers: BTreeMap<String, TransducerDef>,
    pub assertions: Vec<BoolTerm>,
    pub check_sat: bool,
    pub get_model: bool,
}

struct Parser {
    bits: u32,
    f: StrFormula,
}

fn args<'a>(items: &'a [Sexp], n: usize, pos: Pos, op: &str) -> Result<&'a [Sexp], ParseError> {
    if items.len() != n + 1 {
        return syntax(pos, format!("{op} expects {n} argument(s), got {}", items.len() - 1));
    }
    Ok(&items[1..])
}

impl Parser {
    fn word(&self, w: &[u32], pos: Pos) -> Result<Word, ParseError> {
        match w.iter().find(|c| **c >> self.bits != 0) {
            Some(c) => syntax(
                pos,
                format!("character code {c:#x} does not fit in {} bits", self.bits),
            ),
            None => Ok(w.to_vec()),
        }
    }

    fn lit(&self, e: &Sexp) -> Result<Word, ParseError> {
        match e {
            Sexp::Str(w, p) => self.word(w, *p),
            _ => unsupported(e.pos(), "non-constant argument where a string literal is required"),
        }
    }

    fn command(&mut self, e: &Sexp) -> Result<(), ParseError> {
        let Sexp::List(items, pos) = e else {
            return syntax(e.pos(), "expected a command");
        };
        let Some(head) = items.first().and_then(Sexp::sym) else {
            return syntax(*pos, "expected a command name");
        };
        match head {
            "set-logic" | "set-option" | "set-info" | "exit" => Ok(()),
            "check-sat" => {
                self.f.check_sat = true;
                Ok(())
            }
            "get-model" => {
                self.f.get_model = true;
                Ok(())
            }
            "declare-const" => {
                let a = args(items, 2, *pos, head)?;
                self.declare(&a[0], &a[1])
            }
            "declare-fun" => {
                let a = args(items, 3, *pos, head)?;
                if !matches!(&a[1], Sexp::List(l, _) if l.is_empty()) {
                    return unsupported(a[1].pos(), "functions with arguments");
                }
                self.declare(&a[0], &a[2])
            }
            "define-transducer" => self.transducer(items, *pos),
            "assert" => {
                let a = args(items, 1, *pos, head)?;
                let t = self.formula(&a[0])?;
                self.f.assertions.push(t);
                Ok(())
            }
            other => unsupported(*pos, format!("command {other}")),
        }
    }

    fn declare(&mut self, name: &Sexp, sort: &Sexp) -> Result<(), ParseError> {
        let Some(n) = name.sym() else {
            return syntax(name.pos(), "expected a symbol");
        };
        if sort.sym() != Some("String") {
            return unsupported(sort.pos(), "sorts other than String");
        }
        if self.f.vars.iter().any(|v| v == n) || self.f.transducers.contains_key(n) {
            return syntax(name.pos(), format!("{n} is already declared"));
        }
        self.f.vars.push(n.to_string());
        Ok(())
    }

    fn side(&self, e: &Sexp) -> Result<Sym, ParseError> {
        match e {
            Sexp::Sym(s, _) if s == "_" => Ok(Sym::Any),
            Sexp::Str(w, p) => match self.word(w, *p)?.as_slice() {
                [] => Ok(Sym::Eps),
                [c] => Ok(Sym::Char(*c)),
                _ => syntax(*p, "a rule reads or writes at most one character"),
            },
            _ => syntax(e.pos(), "expected a one-character string, \"\" or _"),
        }
    }

    // (define-transducer T (init q) (final q …) (q "a" "b" p) …)
    fn transducer(&mut self, items: &[Sexp], pos: Pos) -> Result<(), ParseError> {
        let Some(name) = items.get(1).and_then(Sexp::sym) else {
            return syntax(pos, "expected a transducer name");
        };
        if self.f.vars.iter().any(|v| v == name) || self.f.transducers.contains_key(name) {
            return syntax(items[1].pos(), format!("{name} is already declared"));
        }
        let mut init = None;
        let mut finals = BTreeSet::new();
        let mut rules = Vec::new();
        for it in &items[2..] {
            let Sexp::List(parts, p) = it else {
                return syntax(it.pos(), "expected (init …), (final …) or a rule");
            };
            let syms: Option<Vec<&str>> = parts.iter().map(Sexp::sym).collect();
            match parts.first().and_then(Sexp::sym) {
                Some("init") => match syms.as_deref() {
                    Some([_, q]) => init = Some(q.to_string()),
                    _ => return syntax(*p, "(init STATE)"),
                },
                Some("final") => match syms {
                    Some(s) => finals.extend(s[1..].iter().map(|q| q.to_string())),
                    None => return syntax(*p, "(final STATE …)"),
                },
                _ => {
                    let [from, input, output, to] = parts.as_slice() else {
                        return syntax(*p, "a rule is (FROM INPUT OUTPUT TO)");
                    };
                    let (Some(from), Some(to)) = (from.sym(), to.sym()) else {
                        return syntax(*p, "rule states must be symbols");
                    };
                    let (input, output) = (self.side(input)?, self.side(output)?);
                    if input == Sym::Eps && output == Sym::Eps {
                        return unsupported(*p, "rules that neither read nor write");
                    }
                    let output = match (input, output) {
                        (Sym::Char(c), Sym::Any) => Sym::Char(c),
                        (Sym::Eps, Sym::Any) => {
                            return syntax(*p, "_ on the output needs a character on the input")
                        }
                        (_, o) => o,
                    };
                    rules.push(Rule {
                        from: from.to_string(),
                        input,
                        output,
                        to: to.to_string(),
                    });
                }
            }
        }
        let Some(init) = init else {
            return syntax(pos, "transducer without (init …)");
        };
        self.f.transducers.insert(
            name.to_string(),
            TransducerDef {
                name: name.to_string(),
                init,
                finals,
                rules,
            },
        );
        Ok(())
    }

    fn formula(&self, e: &Sexp) -> Result<BoolTerm, ParseError> {
        match e {
            Sexp::Sym(s, _) if s == "true" => Ok(BoolTerm::Const(true)),
            Sexp::Sym(s, _) if s == "false" => Ok(BoolTerm::Const(false)),
            Sexp::List(items, pos) => {
                let Some(head) = items.first().and_then(Sexp::sym) else {
                    return syntax(*pos, "expected an operator");
                };
                let rest = &items[1..];
                match head {
                    "not" => Ok(BoolTerm::Not(Box::new(
                        self.formula(&args(items, 1, *pos, head)?[0])?,
                    ))),
                    "and" | "or" => {
                        let ts = rest.iter().map(|x| self.formula(x)).collect::<Result<_, _>>()?;
                        Ok(if head == "and" {
                            BoolTerm::And(ts)
                        } else {
                            BoolTerm::Or(ts)
                        })
                    }
                    "=>" => {
                        let a = args(items, 2, *pos, head)?;
                        Ok(BoolTerm::Or(vec![
                            BoolTerm::Not(Box::new(self.formula(&a[0])?)),
                            self.formula(&a[1])?,
                        ]))
                    }
                    "=" => {
                        if rest.len() < 2 {
                            return syntax(*pos, "= expects at least 2 arguments");
                        }
                        let eqs = rest
                            .windows(2)
                            .map(|w| self.equation(&w[0], &w[1]))
                            .collect::<Result<Vec<_>, _>>()?;
                        Ok(match eqs.len() {
                            1 => eqs.into_iter().next().expect("one"),
                            _ => BoolTerm::And(eqs),
                        })
                    }
                    "str.in.re" | "str.in_re" => {
                        let a = args(items, 2, *pos, head)?;
                        Ok(BoolTerm::InRe(self.term(&a[0])?, self.regex(&a[1])?))
                    }
                    other => unsupported(*pos, format!("operator {other}")),
                }
            }
            _ => syntax(e.pos(), "expected a Boolean formula"),
        }
    }

    fn application<'a>(&self, e: &'a Sexp) -> Option<(&'a str, &'a Sexp)> {
        match e {
            Sexp::List(items, _) if items.len() == 2 => {
                let n = items[0].sym()?;
                self.f.transducers.contains_key(n).then(|| (n, &items[1]))
            }
            _ => None,
        }
    }

    fn equation(&self, a: &Sexp, b: &Sexp) -> Result<BoolTerm, ParseError> {
        for (x, y) in [(a, b), (b, a)] {
            if let Some((name, arg)) = self.application(y) {
                if self.application(x).is_some() {
                    return unsupported(x.pos(), "transducer applications on both sides");
                }
                return Ok(BoolTerm::Transduce {
                    lhs: self.term(x)?,
                    name: name.to_string(),
                    arg: self.term(arg)?,
                });
            }
        }
        Ok(BoolTerm::Eq(self.term(a)?, self.term(b)?))
    }

    fn term(&self, e: &Sexp) -> Result<StrTerm, ParseError> {
        match e {
            Sexp::Str(w, p) => Ok(StrTerm::Lit(self.word(w, *p)?)),
            Sexp::Sym(s, p) => {
                if self.f.vars.iter().any(|v| v == s) {
                    Ok(StrTerm::Var(s.clone()))
                } else {
                    syntax(*p, format!("undeclared symbol {s}"))
                }
            }
            Sexp::Num(_, p) => unsupported(*p, "integer terms"),
            Sexp::List(items, pos) => {
                let Some(head) = items.first().and_then(Sexp::sym) else {
                    return syntax(*pos, "expected an operator");
                };
                match head {
                    "str.++" => Ok(StrTerm::Concat(
                        items[1..].iter().map(|x| self.term(x)).collect::<Result<_, _>>()?,
                    )),
                    "str.replace" | "str.replaceall" | "str.replace_all" => {
                        let a = args(items, 3, *pos, head)?;
                        Ok(StrTerm::Replace {
                            arg: Box::new(self.term(&a[0])?),
                            pattern: self.lit(&a[1])?,
                            replacement: self.lit(&a[2])?,
                            all: head != "str.replace",
                        })
                    }
                    n if self.f.transducers.contains_key(n) => unsupported(
                        *pos,
                        "transducer applications are only allowed as a side of an equation",
                    ),
                    other => unsupported(*pos, format!("operator {other}")),
                }
            }
        }
    }

    fn char_of(&self, e: &Sexp) -> Result<u32, ParseError> {
        match self.lit(e)?.as_slice() {
            [c] => Ok(*c),
            _ => syntax(e.pos(), "re.range expects one-character strings"),
        }
    }

    fn regex(&self, e: &Sexp) -> Result<Regex, ParseError> {
        match e {
            Sexp::Sym(s, p) => match s.as_str() {
                "re.allchar" => Ok(Regex::any(self.bits)),
                "re.all" => Ok(Regex::Star(Box::new(Regex::any(self.bits)))),
                "re.none" | "re.nostr" => Ok(Regex::Nothing),
                other => unsupported(*p, format!("regular expression {other}")),
            },
            Sexp::List(items, pos) => {
                let Some(head) = items.first().and_then(Sexp::sym) else {
                    return syntax(*pos, "expected a regular expression operator");
                };
                let sub = || -> Result<Vec<Regex>, ParseError> {
                    items[1..].iter().map(|x| self.regex(x)).collect()
                };
                match head {
                    "str.to.re" | "str.to_re" => {
                        Ok(Regex::literal(&self.lit(&args(items, 1, *pos, head)?[0])?))
                    }
                    "re.++" => Ok(Regex::Concat(sub()?)),
                    "re.union" => Ok(Regex::Union(sub()?)),
                    "re.*" => Ok(Regex::Star(Box::new(self.regex(&args(items, 1, *pos, head)?[0])?))),
                    "re.+" => Ok(Regex::plus(self.regex(&args(items, 1, *pos, head)?[0])?)),
                    "re.opt" => Ok(Regex::opt(self.regex(&args(items, 1, *pos, head)?[0])?)),
                    "re.range" => {
                        let a = args(items, 2, *pos, head)?;
                        let (lo, hi) = (self.char_of(&a[0])?, self.char_of(&a[1])?);
                        Ok(if lo <= hi {
                            Regex::Class(vec![(lo, hi)])
                        } else {
                            Regex::Nothing
                        })
                    }
                    other => unsupported(*pos, format!("regular expression operator {other}")),
                }
            }
            _ => syntax(e.pos(), "expected a regular expression"),
        }
    }
}

/// Parses a script; characters must fit in `bits` bits.
pub fn parse(input: &str, bits: u32) -> Result<StrFormula, ParseError> {
    let mut lx = Lexer {
        chars: input.chars().peekable(),
        pos: Pos { line: 1, col: 1 },
    };
    let mut p = Parser {
        bits,
        f: StrFormula::default(),
    };
    while let Some(e) = lx.sexp()? {
        p.command(&e)?;
    }
    Ok(p.f)
}
