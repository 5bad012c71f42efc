// SPDX-License-Identifier: Apache-2.0

//! Seeded random automata, transducers and straight-line conjunctions.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use strsolve::automata::{fresh_state, input_bits, Afa, Regex};
use strsolve::formula::{Atom, Expr};
use strsolve::slsolve::{Conjunct, SlConjunction, Term};
use strsolve::transduce::{alphabet, fresh_eps, Aft, Var};

use crate::fixtures::aft;

/// Random formula positive on `states`; `extra` atoms occur with either
/// polarity.
pub fn random_positive(rng: &mut ChaCha8Rng, states: &[u32], extra: &[Atom], depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..5) {
            0 | 1 => Expr::state(states[rng.gen_range(0..states.len())]),
            2 | 3 if !extra.is_empty() => Expr::lit(extra[rng.gen_range(0..extra.len())], rng.gen()),
            _ => Expr::constant(rng.gen_bool(0.7)),
        };
    }
    let kids: Vec<Expr> = (0..rng.gen_range(2..4))
        .map(|_| random_positive(rng, states, extra, depth - 1))
        .collect();
    if rng.gen() {
        Expr::and(kids)
    } else {
        Expr::or(kids)
    }
}

/// Random automaton with `n` fresh states over `bits` input bits.
pub fn random_afa(rng: &mut ChaCha8Rng, n: usize, bits: u32) -> Afa {
    let letters: Vec<Atom> = input_bits(bits, 1).into_iter().collect();
    let states: Vec<u32> = (0..n).map(|_| fresh_state()).collect();
    let delta = states
        .iter()
        .map(|q| (*q, random_positive(rng, &states, &letters, 2)))
        .collect();
    let init = random_positive(rng, &states, &[], 1);
    let fin = random_positive(rng, &states, &[], 1).not().nnf();
    Afa::new(input_bits(bits, 1), delta, init, fin).unwrap()
}

/// Random transducer over a 1-bit alphabet with one ε-bit and `params`
/// parameters (ids `0..params`) in its initial and final formulas.
pub fn random_aft(rng: &mut ChaCha8Rng, tracks: u32, n: u32, params: u32) -> Aft {
    let id = fresh_eps();
    let eps: BTreeSet<u32> = [id].into();
    let letters: Vec<Atom> = alphabet(tracks, 1, &eps).into_iter().collect();
    let states: Vec<u32> = (0..n).map(|_| fresh_state()).collect();
    let ps: Vec<Atom> = (0..params).map(Atom::Param).collect();
    let delta: Vec<(u32, Expr)> = states
        .iter()
        .map(|q| (*q, random_positive(rng, &states, &letters, 2)))
        .collect();
    let init = random_positive(rng, &states, &ps, 1);
    let fin = random_positive(rng, &states, &ps, 1).not().nnf();
    aft(delta, init, fin, tracks, 1, &[id])
}

/// Random straight-line conjunction over one bit with inputs `i0`, `i1`
/// and at most `concats` concatenations.
pub fn random_sl(rng: &mut ChaCha8Rng, concats: usize) -> SlConjunction {
    let mut defined: Vec<Var> = vec!["i0".into(), "i1".into()];
    let mut conjuncts = Vec::new();
    let mut left = concats;
    for k in 0..rng.gen_range(2..6) {
        let x = format!("v{k}");
        let pick = |rng: &mut ChaCha8Rng| defined[rng.gen_range(0..defined.len())].clone();
        if left > 0 && rng.gen_bool(0.5) {
            left -= 1;
            let n = rng.gen_range(2..4);
            let rhs = (0..n).map(|_| Term::Var(pick(rng))).collect();
            conjuncts.push(Conjunct::Equation { lhs: x.clone(), rhs });
        } else {
            let arg = pick(rng);
            conjuncts.push(Conjunct::Rational { lhs: x.clone(), aft: random_aft(rng, 2, 2, 0), args: vec![arg] });
        }
        if rng.gen_bool(0.3) {
            conjuncts.push(Conjunct::Regular {
                afa: Regex::Star(Box::new(Regex::literal(&[rng.gen_range(0..2)]))).to_afa(1),
                var: x.clone(),
                negated: rng.gen(),
            });
        }
        defined.push(x);
    }
    SlConjunction::new(conjuncts, 1)
}

/// Random regular expression over codes `0..2^bits`; no stars when
/// `star_free`.
pub fn random_regex(rng: &mut ChaCha8Rng, bits: u32, depth: u32, star_free: bool) -> Regex {
    let top = (1u32 << bits) - 1;
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..6) {
            0 => Regex::Epsilon,
            1 | 2 => {
                let lo = rng.gen_range(0..=top);
                Regex::Class(vec![(lo, rng.gen_range(lo..=top))])
            }
            _ => Regex::literal(&[rng.gen_range(0..=top)]),
        };
    }
    let sub = |rng: &mut ChaCha8Rng| random_regex(rng, bits, depth - 1, star_free);
    match rng.gen_range(0..if star_free { 2 } else { 3 }) {
        0 => Regex::Concat((0..rng.gen_range(2..4)).map(|_| sub(rng)).collect()),
        1 => Regex::Union(vec![sub(rng), sub(rng)]),
        _ => Regex::Star(Box::new(sub(rng))),
    }
}
