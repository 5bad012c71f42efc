// SPDX-License-Identifier: Apache-2.0

//! Exhaustive reference procedures. They share nothing with the engine
//! beyond formula evaluation.

use std::collections::{BTreeSet, HashSet};

use strsolve::automata::Afa;
use strsolve::formula::{Assignment, Atom, Expr};
use strsolve::reach::{export_aiger, minimal_only, Aiger, TransSys};
use strsolve::transduce::{recognizes_some, Aft, Word};

/// Every word of length at most `max_len` over codes `0..alphabet`, shortest
/// first.
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

/// Every `k`-tuple of words from [`words`].
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

/// The tuples of `t` with every component of length at most `max_len`.
pub fn relation(t: &Aft, max_len: usize) -> BTreeSet<Vec<Word>> {
    tuples(t.tracks() as usize, max_len, 1 << t.bits())
        .into_iter()
        .filter(|tup| recognizes_some(t, tup, None).unwrap())
        .collect()
}

/// Every assignment of `atoms`.
pub fn assignments(atoms: &[Atom]) -> Vec<Assignment> {
    (0u32..1 << atoms.len())
        .map(|m| atoms.iter().enumerate().map(|(i, a)| (*a, m >> i & 1 == 1)).collect())
        .collect()
}

fn eval(e: &Expr, parts: &[&Assignment]) -> bool {
    e.evaluate_with(|a| parts.iter().any(|p| p.get(a) == Some(true)))
}

/// `∃ hidden. a ⇔ ∃ hidden. b` under every assignment of `free`.
pub fn same_projection(a: &Expr, b: &Expr, free: &[Atom], hidden: &[Atom]) -> bool {
    let hs = assignments(hidden);
    assignments(free).iter().all(|f| {
        let ea = hs.iter().any(|h| eval(a, &[f, h]));
        let eb = hs.iter().any(|h| eval(b, &[f, h]));
        ea == eb
    })
}

/// Non-emptiness by exploring every configuration: successors of a set
/// are all sets satisfying the transitions of its members.
pub fn brute_nonempty(a: &Afa) -> bool {
    let states: Vec<u32> = a.states().collect();
    let all: Vec<BTreeSet<u32>> = (0u32..1 << states.len())
        .map(|m| (0..states.len()).filter(|i| m >> i & 1 == 1).map(|i| states[i]).collect())
        .collect();
    let holds = |e: &Expr, c: &BTreeSet<u32>, l: &Assignment| {
        e.evaluate_with(|x| match x {
            Atom::State(q) => c.contains(&q),
            o => l.get(o).unwrap_or(false),
        })
    };
    let none = Assignment::new();
    let mut seen: HashSet<BTreeSet<u32>> = all.iter().filter(|c| holds(a.init(), c, &none)).cloned().collect();
    let mut todo: Vec<BTreeSet<u32>> = seen.iter().cloned().collect();
    let letters = assignments(&a.vars().iter().copied().collect::<Vec<_>>());
    while let Some(c) = todo.pop() {
        if holds(a.final_formula(), &c, &none) {
            return true;
        }
        for l in &letters {
            for d in &all {
                if c.iter().all(|q| holds(a.transition(*q), d, l)) && seen.insert(d.clone()) {
                    todo.push(d.clone());
                }
            }
        }
    }
    false
}

/// Acceptance of `w` by tracking every configuration: successors of a set
/// are all sets satisfying the transitions of its members.
pub fn brute_accepts(a: &Afa, w: &[Assignment]) -> bool {
    let states: Vec<u32> = a.states().collect();
    let n = states.len();
    let set = |m: u32| -> BTreeSet<u32> { (0..n).filter(|i| m >> i & 1 == 1).map(|i| states[i]).collect() };
    let mut current: BTreeSet<u32> = (0..1u32 << n).filter(|m| a.init_holds(&set(*m))).collect();
    for l in w {
        let mut next = BTreeSet::new();
        for pre in &current {
            for post in 0..1u32 << n {
                let post_set = set(post);
                let ok = set(*pre).iter().all(|q| {
                    a.transition(*q).evaluate_with(|x| match x {
                        Atom::State(p) => post_set.contains(&p),
                        o => l.get(o).unwrap_or(false),
                    })
                });
                if ok {
                    next.insert(post);
                }
            }
        }
        current = next;
    }
    current.iter().any(|m| a.final_holds(&set(*m)))
}

/// Simulates the exported circuit of `ts` on every input sequence and
/// returns, per frame, the ⊆-minimal state sets of runs that are still
/// valid.
pub fn aiger_layers(ts: &TransSys, frames: usize) -> Vec<BTreeSet<BTreeSet<u32>>> {
    let (aig, layout) = export_aiger(ts);
    let aig = Aiger::parse(&aig.to_text()).unwrap();
    let broken = aig.latch_index("broken");
    let started = aig.latch_index("started");
    let vectors: Vec<Vec<bool>> = (0u32..1 << aig.inputs.len())
        .map(|m| (0..aig.inputs.len()).map(|i| m >> i & 1 == 1).collect())
        .collect();
    let skip = layout.reset_gadget as usize;
    let mut frontier: HashSet<Vec<bool>> = [aig.reset()].into();
    let mut out = vec![];
    for k in 0..frames + skip {
        if k >= skip {
            let configs = frontier
                .iter()
                .filter(|l| started.map_or(true, |s| l[s]))
                .map(|l| ts.states.iter().enumerate().filter(|(i, _)| l[*i]).map(|(_, q)| *q).collect());
            out.push(minimal_only(configs));
        }
        frontier = frontier
            .iter()
            .flat_map(|l| vectors.iter().map(|i| aig.step(l, i).0))
            .filter(|l| broken.map_or(true, |b| !l[b]))
            .collect();
    }
    out
}
