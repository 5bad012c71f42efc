// SPDX-License-Identifier: Apache-2.0

//! Shared generators and brute-force helpers for unit tests.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::automata::{fresh_state, Afa};
use crate::formula::{Atom, Expr};
use crate::transduce::{alphabet, fresh_eps, recognizes_some, Aft, Var, Word};

pub fn vars(names: &[&str]) -> Vec<Var> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Every word of length at most `max_len` over codes `0..alphabet`.
pub fn words(max_len: usize, alphabet: u32) -> Vec<Word> {
    let mut out = vec![vec![]];
    let mut layer: Vec<Word> = vec![vec![]];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w| {
                (0..alphabet).map(move |c| {
                    let mut x = w.clone();
                    x.push(c);
                    x
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

pub fn tuples(k: usize, max_len: usize, alphabet: u32) -> Vec<Vec<Word>> {
    let ws = words(max_len, alphabet);
    let mut out: Vec<Vec<Word>> = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|t| {
                ws.iter().map(move |w| {
                    let mut x = t.clone();
                    x.push(w.clone());
                    x
                })
            })
            .collect();
    }
    out
}

pub fn rec(t: &Aft, tup: &[Word]) -> bool {
    recognizes_some(t, tup, None).unwrap()
}

pub fn relation(t: &Aft, max_len: usize) -> BTreeSet<Vec<Word>> {
    tuples(t.tracks() as usize, max_len, 1 << t.bits())
        .into_iter()
        .filter(|tup| rec(t, tup))
        .collect()
}

pub fn aft(
    delta: Vec<(u32, Expr)>,
    init: Expr,
    fin: Expr,
    tracks: u32,
    bits: u32,
    eps: &[u32],
) -> Aft {
    let eps: BTreeSet<u32> = eps.iter().copied().collect();
    let base = Afa::new(
        alphabet(tracks, bits, &eps),
        delta.into_iter().collect(),
        init,
        fin,
    )
    .unwrap();
    Aft::new(base, tracks, bits, eps, (1..=tracks).collect()).unwrap()
}

/// Random formula positive on `states`; `extra` atoms occur with either
/// polarity.
pub fn random_positive(rng: &mut ChaCha8Rng, states: &[u32], extra: &[Atom], depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..5) {
            0 | 1 => Expr::state(states[rng.gen_range(0..states.len())]),
            2 | 3 if !extra.is_empty() => {
                Expr::lit(extra[rng.gen_range(0..extra.len())], rng.gen())
            }
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
