// SPDX-License-Identifier: Apache-2.0

//! Random string scripts and a string-level evaluator built on the `regex`
//! crate and std string operations.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use regex::Regex as Re;

use strsolve::automata::Regex;
use strsolve::cli::{BoolTerm, Model, StrFormula, StrTerm};
use strsolve::transduce::Word;

use crate::gen::random_regex;
use crate::oracle::words;

fn text(w: &[u32]) -> String {
    w.iter().map(|c| char::from_u32(*c).expect("code point")).collect()
}

fn pattern(r: &Regex) -> String {
    match r {
        Regex::Nothing => r"\b\B".into(),
        Regex::Epsilon => "(?:)".into(),
        Regex::Class(rs) if rs.is_empty() => r"\b\B".into(),
        Regex::Class(rs) => {
            let body: String = rs.iter().map(|(lo, hi)| format!(r"\x{{{lo:x}}}-\x{{{hi:x}}}")).collect();
            format!("[{body}]")
        }
        Regex::Concat(rs) => rs.iter().map(|r| format!("(?:{})", pattern(r))).collect(),
        Regex::Union(rs) => {
            let alts: Vec<String> = rs.iter().map(pattern).collect();
            format!("(?:{})", alts.join("|"))
        }
        Regex::Star(r) => format!("(?:{})*", pattern(r)),
    }
}

/// `r` as an anchored `regex` crate expression.
pub fn to_re(r: &Regex) -> Re {
    Re::new(&format!(r"\A(?:{})\z", pattern(r))).unwrap()
}

/// Length of the longest word of a star-free expression.
pub fn max_len(r: &Regex) -> usize {
    match r {
        Regex::Nothing | Regex::Epsilon => 0,
        Regex::Class(_) => 1,
        Regex::Concat(rs) => rs.iter().map(max_len).sum(),
        Regex::Union(rs) => rs.iter().map(max_len).max().unwrap_or(0),
        Regex::Star(_) => panic!("unbounded"),
    }
}

fn term(t: &StrTerm, m: &Model) -> String {
    match t {
        StrTerm::Var(v) => text(m.get(v).map_or(&[][..], |w| w)),
        StrTerm::Lit(w) => text(w),
        StrTerm::Concat(ts) => ts.iter().map(|t| term(t, m)).collect(),
        StrTerm::Replace { arg, pattern, replacement, all } => {
            let (s, p, r) = (term(arg, m), text(pattern), text(replacement));
            match (*all, p.is_empty()) {
                (true, true) => s,
                (true, false) => s.replace(&p, &r),
                (false, _) => s.replacen(&p, &r, 1),
            }
        }
    }
}

/// Whether `f` holds under `m`. Transducer applications are not covered.
pub fn holds(f: &BoolTerm, m: &Model) -> bool {
    match f {
        BoolTerm::Const(b) => *b,
        BoolTerm::Eq(a, b) => term(a, m) == term(b, m),
        BoolTerm::InRe(t, r) => to_re(r).is_match(&term(t, m)),
        BoolTerm::Not(g) => !holds(g, m),
        BoolTerm::And(gs) => gs.iter().all(|g| holds(g, m)),
        BoolTerm::Or(gs) => gs.iter().any(|g| holds(g, m)),
        BoolTerm::Transduce { .. } => unimplemented!("transducer applications"),
    }
}

pub fn satisfies(f: &StrFormula, m: &Model) -> bool {
    f.assertions.iter().all(|a| holds(a, m))
}

fn as_word(s: &str) -> Word {
    s.chars().map(|c| c as u32).collect()
}

/// Variables fixed by an earlier `(= v term)`, in order, with their terms.
fn definitions(f: &StrFormula) -> Vec<(String, StrTerm)> {
    let mut seen = BTreeSet::new();
    let mut out = vec![];
    for a in &f.assertions {
        if let BoolTerm::Eq(StrTerm::Var(v), t) = a {
            if seen.insert(v.clone()) {
                out.push((v.clone(), t.clone()));
            }
        }
    }
    out
}

/// A model of a straight-line script with every input of length at most
/// `bound`, found by enumeration.
pub fn witness(f: &StrFormula, bits: u32, bound: usize) -> Option<Model> {
    let defs = definitions(f);
    let defined: BTreeSet<&String> = defs.iter().map(|(v, _)| v).collect();
    let inputs: Vec<&String> = f.vars.iter().filter(|v| !defined.contains(v)).collect();
    let ws = words(bound, 1 << bits);
    let mut idx = vec![0usize; inputs.len()];
    loop {
        let mut m: Model = inputs.iter().zip(&idx).map(|(v, i)| ((*v).clone(), ws[*i].clone())).collect();
        for (v, t) in &defs {
            let val = as_word(&term(t, &m));
            m.insert(v.clone(), val);
        }
        if satisfies(f, &m) {
            return Some(m);
        }
        let mut k = 0;
        while k < idx.len() && idx[k] + 1 == ws.len() {
            idx[k] = 0;
            k += 1;
        }
        if k == idx.len() {
            return None;
        }
        idx[k] += 1;
    }
}

fn random_word(rng: &mut ChaCha8Rng, bits: u32, lens: std::ops::RangeInclusive<usize>) -> Word {
    (0..rng.gen_range(lens)).map(|_| rng.gen_range(0..1 << bits)).collect()
}

/// Random straight-line script: inputs `x0`, `x1`, up to three definitions
/// by concatenation or replacement, and one or two (possibly negated)
/// memberships. At most `concats` definitions are concatenations.
pub fn random_sl_script(rng: &mut ChaCha8Rng, bits: u32, concats: usize) -> StrFormula {
    let mut vars: Vec<String> = vec!["x0".into(), "x1".into()];
    let mut assertions = vec![];
    let mut left = concats;
    for k in 0..rng.gen_range(1..=3) {
        let v = format!("y{k}");
        let t = if left > 0 && rng.gen_bool(0.5) {
            left -= 1;
            let mut picks: Vec<&String> = vars.choose_multiple(rng, 2).collect();
            picks.shuffle(rng);
            let mut parts: Vec<StrTerm> = picks.into_iter().map(|s| StrTerm::Var(s.clone())).collect();
            if rng.gen_bool(0.3) {
                parts[1] = StrTerm::Lit(random_word(rng, bits, 1..=2));
            }
            StrTerm::Concat(parts)
        } else {
            StrTerm::Replace {
                arg: Box::new(StrTerm::Var(vars.choose(rng).unwrap().clone())),
                pattern: random_word(rng, bits, 1..=2),
                replacement: random_word(rng, bits, 0..=2),
                all: rng.gen(),
            }
        };
        assertions.push(BoolTerm::Eq(StrTerm::Var(v.clone()), t));
        vars.push(v);
    }
    for _ in 0..rng.gen_range(1..=2) {
        let on = StrTerm::Var(vars.choose(rng).unwrap().clone());
        let m = BoolTerm::InRe(on, random_regex(rng, bits, 3, false));
        assertions.push(if rng.gen_bool(0.25) { BoolTerm::Not(Box::new(m)) } else { m });
    }
    StrFormula { vars, assertions, ..Default::default() }
}

/// Memberships of a single variable `x`, the first one star-free, which
/// bounds the length of any model.
pub fn random_bounded_script(rng: &mut ChaCha8Rng, bits: u32) -> (StrFormula, usize) {
    let x = || StrTerm::Var("x".into());
    let first = random_regex(rng, bits, 3, true);
    let bound = max_len(&first);
    let mut assertions = vec![BoolTerm::InRe(x(), first)];
    for _ in 0..rng.gen_range(1..=2) {
        let m = BoolTerm::InRe(x(), random_regex(rng, bits, 3, false));
        assertions.push(if rng.gen() { BoolTerm::Not(Box::new(m)) } else { m });
    }
    let f = StrFormula { vars: vec!["x".into()], assertions, ..Default::default() };
    (f, bound)
}
