// SPDX-License-Identifier: Apache-2.0

//! Regular expressions over character codes and their position automata.

use std::collections::{BTreeMap, BTreeSet};

use crate::formula::{Atom, Expr};

use super::{fresh_state, input_bits, Afa, AutomataError};

/// Regular expression over character codes. Classes are sorted, disjoint,
/// inclusive ranges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Regex {
    Nothing,
    Epsilon,
    Class(Vec<(u32, u32)>),
    Concat(Vec<Regex>),
    Union(Vec<Regex>),
    Star(Box<Regex>),
}

impl Regex {
    pub fn literal(s: &[u32]) -> Regex {
        Regex::Concat(s.iter().map(|c| Regex::Class(vec![(*c, *c)])).collect())
    }

    pub fn any(bits: u32) -> Regex {
        Regex::Class(vec![(0, (1u32 << bits) - 1)])
    }

    pub fn plus(r: Regex) -> Regex {
        Regex::Concat(vec![r.clone(), Regex::Star(Box::new(r))])
    }

    pub fn opt(r: Regex) -> Regex {
        Regex::Union(vec![Regex::Epsilon, r])
    }

    pub fn nullable(&self) -> bool {
        match self {
            Regex::Nothing | Regex::Class(_) => false,
            Regex::Epsilon | Regex::Star(_) => true,
            Regex::Concat(rs) => rs.iter().all(Regex::nullable),
            Regex::Union(rs) => rs.iter().any(Regex::nullable),
        }
    }

    /// Largest character code mentioned.
    pub fn max_code(&self) -> Option<u32> {
        match self {
            Regex::Nothing | Regex::Epsilon => None,
            Regex::Class(rs) => rs.last().map(|r| r.1),
            Regex::Concat(rs) | Regex::Union(rs) => rs.iter().filter_map(Regex::max_code).max(),
            Regex::Star(r) => r.max_code(),
        }
    }

    pub fn to_afa(&self, bits: u32) -> Afa {
        glushkov(self, bits)
    }
}

/// Normalises a list of ranges into sorted disjoint ones.
pub fn normalize_ranges(mut rs: Vec<(u32, u32)>) -> Vec<(u32, u32)> {
    rs.retain(|(a, b)| a <= b);
    rs.sort();
    let mut out: Vec<(u32, u32)> = Vec::new();
    for (a, b) in rs {
        match out.last_mut() {
            Some(last) if a <= last.1.saturating_add(1) => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

pub fn complement_ranges(rs: &[(u32, u32)], bits: u32) -> Vec<(u32, u32)> {
    let top = (1u32 << bits) - 1;
    let mut out = Vec::new();
    let mut next = 0u32;
    for &(a, b) in rs {
        if a > top {
            break;
        }
        if a > next {
            out.push((next, a - 1));
        }
        next = b.saturating_add(1);
    }
    if next <= top {
        out.push((next, top));
    }
    out
}

/// Formula over `v_0 … v_{bits-1}` on `track` true exactly for codes in the
/// ranges, built by splitting on the most significant bit.
pub fn char_class_formula(ranges: &[(u32, u32)], bits: u32, track: u32) -> Expr {
    fn go(ranges: &[(u32, u32)], lo: u32, width: u32, track: u32) -> Expr {
        let hi = lo + ((1u64 << width) - 1) as u32;
        let inside: Vec<(u32, u32)> = ranges
            .iter()
            .filter(|(a, b)| *b >= lo && *a <= hi)
            .map(|(a, b)| ((*a).max(lo), (*b).min(hi)))
            .collect();
        if inside.is_empty() {
            return Expr::ff();
        }
        if inside.len() == 1 && inside[0] == (lo, hi) {
            return Expr::tt();
        }
        let bit = width - 1;
        let v = Expr::atom(Atom::Input { bit, track });
        let half = 1u32 << bit;
        let low = go(&inside, lo, bit, track);
        let high = go(&inside, lo + half, bit, track);
        Expr::or2(&Expr::and2(&v.not(), &low), &Expr::and2(&v, &high))
    }
    go(&normalize_ranges(ranges.to_vec()), 0, bits, track)
}

/// Widest supported letter.
pub const MAX_BITS: u32 = 16;

struct Parser {
    chars: Vec<char>,
    pos: usize,
    max_literal: u32,
}

fn perr(offset: usize, msg: &str) -> AutomataError {
    AutomataError::RegexParse {
        offset,
        msg: msg.to_string(),
    }
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn alt(&mut self) -> Result<Regex, AutomataError> {
        let mut branches = vec![self.concat()?];
        while self.peek() == Some('|') {
            self.pos += 1;
            branches.push(self.concat()?);
        }
        Ok(if branches.len() == 1 {
            branches.pop().unwrap()
        } else {
            Regex::Union(branches)
        })
    }

    fn concat(&mut self) -> Result<Regex, AutomataError> {
        let mut items = Vec::new();
        while let Some(c) = self.peek() {
            if c == '|' || c == ')' {
                break;
            }
            items.push(self.repeat()?);
        }
        Ok(match items.len() {
            0 => Regex::Epsilon,
            1 => items.pop().unwrap(),
            _ => Regex::Concat(items),
        })
    }

    fn repeat(&mut self) -> Result<Regex, AutomataError> {
        let mut r = self.atom()?;
        while let Some(c) = self.peek() {
            r = match c {
                '*' => Regex::Star(Box::new(r)),
                '+' => Regex::plus(r),
                '?' => Regex::opt(r),
                _ => break,
            };
            self.pos += 1;
        }
        Ok(r)
    }

    fn escape(&mut self) -> Result<u32, AutomataError> {
        let at = self.pos;
        let c = self.peek().ok_or_else(|| perr(at, "dangling escape"))?;
        self.pos += 1;
        Ok(match c {
            'n' => '\n' as u32,
            't' => '\t' as u32,
            'r' => '\r' as u32,
            'x' => {
                let hex: String = self.chars[self.pos..].iter().take(2).collect();
                if hex.len() != 2 {
                    return Err(perr(at, "expected two hex digits"));
                }
                self.pos += 2;
                u32::from_str_radix(&hex, 16).map_err(|_| perr(at, "bad hex escape"))?
            }
            other => other as u32,
        })
    }

    fn class_char(&mut self) -> Result<u32, AutomataError> {
        let at = self.pos;
        match self.peek() {
            None => Err(perr(at, "unterminated class")),
            Some('\\') => {
                self.pos += 1;
                self.escape()
            }
            Some(c) => {
                self.pos += 1;
                Ok(c as u32)
            }
        }
    }

    fn atom(&mut self) -> Result<Regex, AutomataError> {
        let at = self.pos;
        let c = self.peek().ok_or_else(|| perr(at, "unexpected end"))?;
        self.pos += 1;
        match c {
            '(' => {
                let r = self.alt()?;
                if self.peek() != Some(')') {
                    return Err(perr(self.pos, "expected ')'"));
                }
                self.pos += 1;
                Ok(r)
            }
            '[' => {
                let negated = self.peek() == Some('^');
                if negated {
                    self.pos += 1;
                }
                let mut ranges = Vec::new();
                let mut first = true;
                loop {
                    match self.peek() {
                        None => return Err(perr(at, "unterminated class")),
                        Some(']') if !first => {
                            self.pos += 1;
                            break;
                        }
                        _ => {}
                    }
                    first = false;
                    let lo = self.class_char()?;
                    let hi = if self.peek() == Some('-')
                        && self.chars.get(self.pos + 1).is_some_and(|c| *c != ']')
                    {
                        self.pos += 1;
                        self.class_char()?
                    } else {
                        lo
                    };
                    if hi < lo {
                        return Err(perr(at, "empty range in class"));
                    }
                    ranges.push((lo, hi));
                }
                let ranges = normalize_ranges(ranges);
                for (_, hi) in &ranges {
                    self.max_literal = self.max_literal.max(*hi);
                }
                // negated classes are taken against the widest alphabet and
                // clipped when the automaton is built
                Ok(if negated {
                    Regex::Class(complement_ranges(&ranges, MAX_BITS))
                } else {
                    Regex::Class(ranges)
                })
            }
            '.' => Ok(Regex::Class(vec![(0, u32::MAX)])),
            '\\' => {
                let code = self.escape()?;
                self.max_literal = self.max_literal.max(code);
                Ok(Regex::Class(vec![(code, code)]))
            }
            '*' | '+' | '?' => Err(perr(at, "repetition without operand")),
            ')' | '|' => Err(perr(at, "unexpected delimiter")),
            other => {
                self.max_literal = self.max_literal.max(other as u32);
                Ok(Regex::Class(vec![(other as u32, other as u32)]))
            }
        }
    }
}

impl Regex {
    /// Clips every class to codes below `2^bits`.
    pub fn clip(&self, bits: u32) -> Regex {
        let top = (1u32 << bits) - 1;
        match self {
            Regex::Class(rs) => Regex::Class(
                rs.iter()
                    .filter(|(a, _)| *a <= top)
                    .map(|(a, b)| (*a, (*b).min(top)))
                    .collect(),
            ),
            Regex::Concat(rs) => Regex::Concat(rs.iter().map(|r| r.clip(bits)).collect()),
            Regex::Union(rs) => Regex::Union(rs.iter().map(|r| r.clip(bits)).collect()),
            Regex::Star(r) => Regex::Star(Box::new(r.clip(bits))),
            other => other.clone(),
        }
    }
}

/// Parses the textual syntax: literals, `\`-escapes (`\n`, `\t`, `\xHH`),
/// classes `[a-z]` and `[^…]`, `.`, grouping, `|`, `*`, `+`, `?`.
pub fn parse_regex(src: &str) -> Result<Regex, AutomataError> {
    parse_with_max(src).map(|(r, _)| r)
}

fn parse_with_max(src: &str) -> Result<(Regex, u32), AutomataError> {
    let mut p = Parser {
        chars: src.chars().collect(),
        pos: 0,
        max_literal: 0,
    };
    let r = p.alt()?;
    if p.pos != p.chars.len() {
        return Err(perr(p.pos, "unbalanced ')'"));
    }
    Ok((r, p.max_literal))
}

/// Parses `src` and builds its position automaton over `bits`-bit letters.
/// Literal characters outside the alphabet are rejected.
pub fn afa_from_regex(src: &str, bits: u32) -> Result<Afa, AutomataError> {
    let (r, max) = parse_with_max(src)?;
    if max >= 1u32 << bits {
        return Err(perr(0, "character outside the alphabet"));
    }
    Ok(r.clip(bits).to_afa(bits))
}

struct Linear {
    classes: Vec<Vec<(u32, u32)>>,
}

struct Info {
    nullable: bool,
    first: BTreeSet<usize>,
    last: BTreeSet<usize>,
}

fn linearize(
    r: &Regex,
    lin: &mut Linear,
    follow: &mut BTreeMap<usize, BTreeSet<usize>>,
) -> Info {
    match r {
        Regex::Nothing => Info {
            nullable: false,
            first: BTreeSet::new(),
            last: BTreeSet::new(),
        },
        Regex::Epsilon => Info {
            nullable: true,
            first: BTreeSet::new(),
            last: BTreeSet::new(),
        },
        Regex::Class(rs) => {
            if rs.is_empty() {
                return linearize(&Regex::Nothing, lin, follow);
            }
            let p = lin.classes.len();
            lin.classes.push(rs.clone());
            Info {
                nullable: false,
                first: [p].into(),
                last: [p].into(),
            }
        }
        Regex::Union(rs) => {
            let mut out = Info {
                nullable: false,
                first: BTreeSet::new(),
                last: BTreeSet::new(),
            };
            for r in rs {
                let i = linearize(r, lin, follow);
                out.nullable |= i.nullable;
                out.first.extend(i.first);
                out.last.extend(i.last);
            }
            out
        }
        Regex::Concat(rs) => {
            let mut out = Info {
                nullable: true,
                first: BTreeSet::new(),
                last: BTreeSet::new(),
            };
            for r in rs {
                let i = linearize(r, lin, follow);
                for l in &out.last {
                    follow.entry(*l).or_default().extend(i.first.iter().copied());
                }
                if out.nullable {
                    out.first.extend(i.first.iter().copied());
                }
                if i.nullable {
                    out.last.extend(i.last);
                } else {
                    out.last = i.last;
                }
                out.nullable &= i.nullable;
            }
            out
        }
        Regex::Star(inner) => {
            let i = linearize(inner, lin, follow);
            for l in &i.last {
                follow.entry(*l).or_default().extend(i.first.iter().copied());
            }
            Info {
                nullable: true,
                first: i.first,
                last: i.last,
            }
        }
    }
}

fn glushkov(r: &Regex, bits: u32) -> Afa {
    let mut lin = Linear {
        classes: Vec::new(),
    };
    let mut follow = BTreeMap::new();
    let info = linearize(r, &mut lin, &mut follow);
    let start = fresh_state();
    let pos: Vec<u32> = (0..lin.classes.len()).map(|_| fresh_state()).collect();
    let step = |targets: Option<&BTreeSet<usize>>| -> Expr {
        Expr::or(targets.into_iter().flatten().map(|p| {
            Expr::and2(
                &char_class_formula(&lin.classes[*p], bits, 1),
                &Expr::state(pos[*p]),
            )
        }))
    };
    let mut delta = BTreeMap::new();
    delta.insert(start, step(Some(&info.first)));
    for (i, q) in pos.iter().enumerate() {
        delta.insert(*q, step(follow.get(&i)));
    }
    let mut rejecting: Vec<Expr> = pos
        .iter()
        .enumerate()
        .filter(|(i, _)| !info.last.contains(i))
        .map(|(_, q)| Expr::state(*q).not())
        .collect();
    if !info.nullable {
        rejecting.push(Expr::state(start).not());
    }
    Afa::from_parts_unchecked(
        input_bits(bits, 1),
        delta,
        Expr::state(start),
        Expr::and(rejecting),
    )
}
