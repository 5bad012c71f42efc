// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use crate::automata::{char_class_formula, fresh_state, Afa};
use crate::formula::{Atom, Expr};

use super::{
    alphabet, check_distinct, data, eps_on, fresh_eps, reads, same_char, Aft, TransduceError,
    Var,
};

// Accumulates an NFA-shaped transducer: each state gets a disjunction of
// guarded successor terms.
struct Builder {
    tracks: u32,
    bits: u32,
    eps: BTreeSet<u32>,
    delta: BTreeMap<u32, Vec<Expr>>,
}

impl Builder {
    fn new(tracks: u32, bits: u32) -> Builder {
        Builder {
            tracks,
            bits,
            eps: [fresh_eps()].into(),
            delta: BTreeMap::new(),
        }
    }

    fn state(&mut self) -> u32 {
        let q = fresh_state();
        self.delta.insert(q, Vec::new());
        q
    }

    fn edge(&mut self, from: u32, guard: Expr, to: u32) {
        let t = Expr::and2(&guard, &Expr::state(to));
        self.delta.get_mut(&from).expect("known state").push(t);
    }

    fn term(&mut self, from: u32, t: Expr) {
        self.delta.get_mut(&from).expect("known state").push(t);
    }

    fn data(&self, track: u32) -> Expr {
        data(track, &self.eps)
    }

    fn eps(&self, track: u32) -> Expr {
        eps_on(track, &self.eps)
    }

    fn reads(&self, code: u32, track: u32) -> Expr {
        reads(code, self.bits, track, &self.eps)
    }

    // Only `track` reads; every other track listed in `others` is ε.
    fn only(&self, track: u32, others: impl IntoIterator<Item = u32>) -> Expr {
        Expr::and(
            std::iter::once(self.data(track))
                .chain(others.into_iter().filter(|t| *t != track).map(|t| self.eps(t))),
        )
    }

    fn finish(self, init: Expr, fin: Expr) -> Result<Aft, TransduceError> {
        let delta = self.delta.into_iter().map(|(q, ts)| (q, Expr::or(ts))).collect();
        let base = Afa::new(alphabet(self.tracks, self.bits, &self.eps), delta, init, fin)?;
        let active = (1..=self.tracks).collect();
        Aft::new(base, self.tracks, self.bits, self.eps, active)
    }
}

/// `lhs = rhs_1 ∘ … ∘ rhs_n` (or its negation) as a transducer over the
/// tracks `(lhs, rhs_1, …, rhs_n)`.
pub fn equation_to_aft(
    lhs: &Var,
    rhs: &[Var],
    negated: bool,
    bits: u32,
) -> Result<Aft, TransduceError> {
    let mut all = vec![lhs.clone()];
    all.extend(rhs.iter().cloned());
    check_distinct(&all)?;
    let n = rhs.len() as u32;
    let mut b = Builder::new(n + 1, bits);
    let rhs_tracks = || 2..=n + 1;
    // copy the current character of track 1 to track j+1
    let copy = |b: &Builder, j: u32, equal: bool| {
        let same = same_char(1, j + 1, b.bits);
        Expr::and([
            b.data(1),
            b.only(j + 1, rhs_tracks()),
            if equal { same } else { same.not() },
        ])
    };
    let phases: Vec<u32> = (0..n).map(|_| b.state()).collect();
    if !negated {
        if n == 0 {
            let q = b.state();
            return b.finish(Expr::state(q), Expr::tt());
        }
        for i in 0..n {
            for j in i..n {
                let g = copy(&b, j + 1, true);
                b.edge(phases[i as usize], g, phases[j as usize]);
            }
        }
        return b.finish(Expr::state(phases[0]), Expr::tt());
    }
    // x ≠ x1…xn: a mismatch, x running out first, or x longer
    let longer = b.state();
    let all_rhs_eps = Expr::and(rhs_tracks().map(|t| b.eps(t)));
    b.term(longer, Expr::and2(&Expr::state(longer), &all_rhs_eps));
    let start = if n == 0 {
        let q = b.state();
        b.edge(q, b.data(1), longer);
        return b.finish(Expr::state(q), Expr::state(q).not());
    } else {
        phases[0]
    };
    let mut diverged = Vec::new();
    let mut shorter = Vec::new();
    for j in 0..n {
        // tracks before rhs_{j+1} are finished
        let done = Expr::and((2..j + 2).map(|t| b.eps(t)));
        let d = b.state();
        b.term(d, Expr::and2(&Expr::state(d), &done));
        diverged.push(d);
        let s = b.state();
        b.term(s, Expr::and([Expr::state(s), b.eps(1), done.clone()]));
        shorter.push(s);
    }
    for i in 0..n {
        let from = phases[i as usize];
        for j in i..n {
            let g = copy(&b, j + 1, true);
            b.edge(from, g, phases[j as usize]);
            let g = copy(&b, j + 1, false);
            b.edge(from, g, diverged[j as usize]);
            let g = Expr::and2(&b.eps(1), &b.only(j + 2, rhs_tracks()));
            b.edge(from, g, shorter[j as usize]);
        }
        let g = Expr::and2(&b.data(1), &all_rhs_eps);
        b.edge(from, g, longer);
    }
    let fin = Expr::and(phases.iter().map(|q| Expr::state(*q).not()));
    b.finish(Expr::state(start), fin)
}

/// `{ base + Σ λ_j · periods_j }` over track lengths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearSet {
    pub base: Vec<u32>,
    pub periods: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LengthSpec {
    /// Union of linear sets.
    Linear(Vec<LinearSet>),
    /// `Σ coeffs_i · |x_i| ≥ bound`.
    AtLeast { coeffs: Vec<u32>, bound: u32 },
}

/// Length constraint over `k` tracks.
pub fn length_to_aft(spec: &LengthSpec, k: u32, bits: u32) -> Result<Aft, TransduceError> {
    let dim = |v: &[u32]| -> Result<(), TransduceError> {
        if v.len() == k as usize {
            Ok(())
        } else {
            Err(TransduceError::Unsupported(format!(
                "length vector of dimension {} for {k} tracks",
                v.len()
            )))
        }
    };
    let mut b = Builder::new(k, bits);
    let step = |b: &Builder, track: u32| b.only(track, 1..=k);
    match spec {
        LengthSpec::AtLeast { coeffs, bound } => {
            dim(coeffs)?;
            let counter: Vec<u32> = (0..=*bound).map(|_| b.state()).collect();
            for n in 0..=*bound {
                for (i, c) in coeffs.iter().enumerate() {
                    let to = (n + c).min(*bound);
                    let g = step(&b, i as u32 + 1);
                    b.edge(counter[n as usize], g, counter[to as usize]);
                }
            }
            let fin = Expr::and((0..*bound).map(|n| Expr::state(counter[n as usize]).not()));
            b.finish(Expr::state(counter[0]), fin)
        }
        LengthSpec::Linear(sets) => {
            let mut starts = Vec::new();
            let mut accepting = BTreeSet::new();
            for set in sets {
                dim(&set.base)?;
                let hub = b.state();
                accepting.insert(hub);
                let start = read_vector(&mut b, &set.base, hub, &step);
                starts.push(Expr::state(start));
                for p in &set.periods {
                    dim(p)?;
                    if p.iter().any(|x| *x > 0) {
                        let entry = read_vector(&mut b, p, hub, &step);
                        // the cycle's first edge leaves the hub
                        let first = b.delta[&entry].clone();
                        b.delta.get_mut(&hub).expect("hub").extend(first);
                    }
                }
            }
            let fin = Expr::and(
                b.delta
                    .keys()
                    .filter(|q| !accepting.contains(q))
                    .map(|q| Expr::state(*q).not())
                    .collect::<Vec<_>>(),
            );
            b.finish(Expr::or(starts), fin)
        }
    }
}

// Chain reading `v[i]` characters on each track i, ending in `to`; returns
// the chain's first state (`to` itself for the zero vector).
fn read_vector(b: &mut Builder, v: &[u32], to: u32, step: &dyn Fn(&Builder, u32) -> Expr) -> u32 {
    let reads: Vec<u32> = v
        .iter()
        .enumerate()
        .flat_map(|(i, n)| std::iter::repeat(i as u32 + 1).take(*n as usize))
        .collect();
    let mut cur = to;
    for track in reads.iter().rev() {
        let q = b.state();
        let g = step(b, *track);
        b.edge(q, g, cur);
        cur = q;
    }
    cur
}

/// `x′ = ℛ(x)` with `rel(ℛ) = Σ* × L(a)`: the language moves to track 2
/// and every state may idle while track 2 is ε, so track 1 is free.
pub fn regular_to_rational(a: &Afa, bits: u32) -> Result<Aft, TransduceError> {
    let e = fresh_eps();
    let eps: BTreeSet<u32> = [e].into();
    let on2 = a.map_letters(|x| match x {
        Atom::Input { bit, track: 1 } => Atom::Input { bit, track: 2 },
        o => o,
    });
    let e2 = Expr::atom(Atom::Eps { id: e, track: 2 });
    let delta = on2
        .delta()
        .iter()
        .map(|(q, d)| {
            let read = Expr::and2(d, &e2.not());
            (*q, Expr::or2(&read, &Expr::and2(&e2, &Expr::state(*q))))
        })
        .collect();
    let base = Afa::new(
        alphabet(2, bits, &eps),
        delta,
        a.init().clone(),
        a.final_formula().clone(),
    )?;
    Aft::new(base, 2, bits, eps, [1, 2].into())
}

/// Leftmost, non-overlapping replacement of `pattern` by `replacement`
/// (only the first occurrence unless `all`), over the tracks
/// `(output, input)`.
///
/// Scanning states remember how much of the pattern has been matched, as
/// in Knuth–Morris–Pratt. Characters that fall out of a partial match are
/// written back on ε-input steps.
pub fn replace_transducer(
    pattern: &[u32],
    replacement: &[u32],
    all: bool,
    bits: u32,
) -> Result<Aft, TransduceError> {
    if pattern.is_empty() {
        return Err(TransduceError::EmptyPattern);
    }
    const OUT: u32 = 1;
    const IN: u32 = 2;
    let p = pattern.len();
    let mut b = Builder::new(2, bits);
    let scan: Vec<u32> = (0..p).map(|_| b.state()).collect();
    let rest = b.state();
    let after_match = if all { scan[0] } else { rest };
    let copy = Expr::and([b.data(IN), b.data(OUT), same_char(OUT, IN, bits)]);
    b.term(rest, Expr::and2(&copy, &Expr::state(rest)));
    let mut finals: BTreeSet<u32> = [scan[0], rest].into();
    let chars: BTreeSet<u32> = pattern.iter().copied().collect();
    let ranges: Vec<(u32, u32)> = chars.iter().map(|c| (*c, *c)).collect();
    let foreign = char_class_formula(&ranges, bits, IN).not();
    // emits `out` after the step guarded by `first_in`, then moves to `to`
    let emit = |b: &mut Builder, from: u32, first_in: Expr, out: &[u32], to: u32| {
        let mut cur = from;
        let mut guard_in = first_in;
        for (i, c) in out.iter().enumerate() {
            let next = if i + 1 == out.len() { to } else { b.state() };
            let g = Expr::and2(&guard_in, &b.reads(*c, OUT));
            b.edge(cur, g, next);
            cur = next;
            guard_in = b.eps(IN);
        }
        if out.is_empty() {
            let g = Expr::and2(&guard_in, &b.eps(OUT));
            b.edge(cur, g, to);
        }
    };
    for m in 0..p {
        for c in &chars {
            let mut buf = pattern[..m].to_vec();
            buf.push(*c);
            let (out, to) = if *c == pattern[m] && m + 1 == p {
                (replacement.to_vec(), after_match)
            } else if *c == pattern[m] {
                (Vec::new(), scan[m + 1])
            } else {
                let keep = (0..=m.min(p - 1))
                    .rev()
                    .find(|l| buf.ends_with(&pattern[..*l]))
                    .unwrap_or(0);
                (buf[..buf.len() - keep].to_vec(), scan[keep])
            };
            let g = b.reads(*c, IN);
            emit(&mut b, scan[m], g, &out, to);
        }
        // give back the partial match, then either stop or copy a
        // character foreign to the pattern
        let flushed = if m == 0 {
            scan[0]
        } else {
            let q = b.state();
            let g = b.eps(IN);
            emit(&mut b, scan[m], g, &pattern[..m], q);
            finals.insert(q);
            q
        };
        let g = Expr::and2(&copy, &foreign);
        b.edge(flushed, g, scan[0]);
    }
    let fin = Expr::and(
        b.delta
            .keys()
            .filter(|q| !finals.contains(q))
            .map(|q| Expr::state(*q).not())
            .collect::<Vec<_>>(),
    );
    b.finish(Expr::state(scan[0]), fin)
}
