// SPDX-License-Identifier: Apache-2.0

//! Direct string-level evaluation of formulas, used to check models before
//! they are reported.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::automata::Regex;
use crate::transduce::Word;

use super::parse::{BoolTerm, StrFormula, StrTerm, Sym, TransducerDef};

pub type Model = BTreeMap<String, Word>;

/// Positions reachable after matching `re` from any position in `from`.
fn ends(re: &Regex, w: &[u32], from: &BTreeSet<usize>) -> BTreeSet<usize> {
    match re {
        Regex::Nothing => BTreeSet::new(),
        Regex::Epsilon => from.clone(),
        Regex::Class(rs) => from
            .iter()
            .filter(|i| w.get(**i).is_some_and(|c| rs.iter().any(|(lo, hi)| lo <= c && c <= hi)))
            .map(|i| i + 1)
            .collect(),
        Regex::Concat(rs) => rs.iter().fold(from.clone(), |acc, r| ends(r, w, &acc)),
        Regex::Union(rs) => rs.iter().flat_map(|r| ends(r, w, from)).collect(),
        Regex::Star(r) => {
            let mut all = from.clone();
            let mut frontier = from.clone();
            while !frontier.is_empty() {
                let next = ends(r, w, &frontier);
                frontier = next.difference(&all).copied().collect();
                all.extend(frontier.iter().copied());
            }
            all
        }
    }
}

pub fn matches(re: &Regex, w: &[u32]) -> bool {
    ends(re, w, &[0].into()).contains(&w.len())
}

/// Leftmost replacement of `pattern`; every non-overlapping occurrence
/// when `all` is set. An empty pattern matches once at the front, or
/// never for `all`.
pub fn replace(w: &[u32], pattern: &[u32], replacement: &[u32], all: bool) -> Word {
    if pattern.is_empty() {
        if all {
            return w.to_vec();
        }
        return replacement.iter().chain(w).copied().collect();
    }
    let mut out = Vec::new();
    let mut i = 0;
    let mut done = false;
    while i < w.len() {
        if !done && w[i..].starts_with(pattern) {
            out.extend_from_slice(replacement);
            i += pattern.len();
            done = !all;
        } else {
            out.push(w[i]);
            i += 1;
        }
    }
    out
}

/// Whether some run of `t` reads `input` while writing `output`.
pub fn relates(t: &TransducerDef, input: &[u32], output: &[u32]) -> bool {
    let mut seen = BTreeSet::new();
    let mut todo = VecDeque::from([(t.init.as_str(), 0usize, 0usize)]);
    while let Some((q, i, j)) = todo.pop_front() {
        if !seen.insert((q, i, j)) {
            continue;
        }
        if i == input.len() && j == output.len() && t.finals.contains(q) {
            return true;
        }
        for r in t.rules.iter().filter(|r| r.from == q) {
            let (ni, read) = match r.input {
                Sym::Eps => (i, None),
                Sym::Char(c) if input.get(i) == Some(&c) => (i + 1, Some(c)),
                Sym::Any if i < input.len() => (i + 1, Some(input[i])),
                _ => continue,
            };
            let nj = match r.output {
                Sym::Eps => j,
                Sym::Char(c) if output.get(j) == Some(&c) => j + 1,
                Sym::Any if output.get(j).is_some() && read == Some(output[j]) => j + 1,
                _ => continue,
            };
            todo.push_back((r.to.as_str(), ni, nj));
        }
    }
    false
}

pub fn eval_term(t: &StrTerm, m: &Model) -> Word {
    match t {
        StrTerm::Var(v) => m.get(v).cloned().unwrap_or_default(),
        StrTerm::Lit(w) => w.clone(),
        StrTerm::Concat(ts) => ts.iter().flat_map(|t| eval_term(t, m)).collect(),
        StrTerm::Replace {
            arg,
            pattern,
            replacement,
            all,
        } => replace(&eval_term(arg, m), pattern, replacement, *all),
    }
}

pub fn eval(f: &BoolTerm, ts: &BTreeMap<String, TransducerDef>, m: &Model) -> bool {
    match f {
        BoolTerm::Const(b) => *b,
        BoolTerm::Eq(a, b) => eval_term(a, m) == eval_term(b, m),
        BoolTerm::Transduce { lhs, name, arg } => {
            relates(&ts[name], &eval_term(arg, m), &eval_term(lhs, m))
        }
        BoolTerm::InRe(t, re) => matches(re, &eval_term(t, m)),
        BoolTerm::Not(g) => !eval(g, ts, m),
        BoolTerm::And(gs) => gs.iter().all(|g| eval(g, ts, m)),
        BoolTerm::Or(gs) => gs.iter().any(|g| eval(g, ts, m)),
    }
}

/// Every assertion holds; undeclared variables read as empty.
pub fn check_model(f: &StrFormula, m: &Model) -> bool {
    f.assertions.iter().all(|a| eval(a, &f.transducers, m))
}
