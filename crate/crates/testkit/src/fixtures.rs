// SPDX-License-Identifier: Apache-2.0

//! Small hand-built automata and transducers with known languages.

use std::collections::{BTreeMap, BTreeSet};

use strsolve::automata::{char_formula, fresh_state, input_bits, Afa};
use strsolve::formula::{Atom, Expr};
use strsolve::slsolve::{Conjunct, Constraint, Literal, SlConjunction, Term};
use strsolve::transduce::{alphabet, data, reads, same_char, Aft};

fn st(q: u32) -> Expr {
    Expr::state(q)
}

/// Bit `bit` of the letter on track 1.
pub fn bit(bit: u32) -> Expr {
    Expr::atom(Atom::Input { bit, track: 1 })
}

pub fn next(q: u32) -> Expr {
    Expr::atom(Atom::Next(q))
}

/// Builds a transducer from its transition table.
pub fn aft(delta: Vec<(u32, Expr)>, init: Expr, fin: Expr, tracks: u32, bits: u32, eps: &[u32]) -> Aft {
    let eps: BTreeSet<u32> = eps.iter().copied().collect();
    let base = Afa::new(alphabet(tracks, bits, &eps), delta.into_iter().collect(), init, fin).unwrap();
    Aft::new(base, tracks, bits, eps, (1..=tracks).collect()).unwrap()
}

/// Letters of the four-letter alphabet over two bits.
pub mod abcd {
    pub const A: u32 = 0;
    pub const B: u32 = 1;
    pub const C: u32 = 2;
    pub const D: u32 = 3;
}

/// Two automata over `{a,b,c,d}`: the first counts modulo 5 and spawns a
/// run on every `a`/`b` that waits for a later `c`/`d`; the second counts
/// modulo 7.
pub fn mod35_parts() -> (Afa, Afa) {
    let (q, p, r1, r2) = (|i: u32| i, |i: u32| 10 + i, 20, 21);
    let mut d1 = BTreeMap::new();
    for i in 0..5 {
        let nxt = st(q((i + 1) % 5));
        d1.insert(
            q(i),
            Expr::or2(&Expr::and([bit(1).not(), nxt.clone(), st(r1)]), &Expr::and2(&bit(1), &nxt)),
        );
    }
    d1.insert(r1, Expr::or2(&Expr::and2(&bit(1), &st(r2)), &Expr::and2(&bit(1).not(), &st(r1))));
    d1.insert(r2, st(r2));
    let f1 = Expr::and((1..5).map(|i| st(q(i)).not()).chain([st(r1).not()]));
    let qr = Afa::new(input_bits(2, 1), d1, st(q(0)), f1).unwrap();
    let mut d2 = BTreeMap::new();
    for i in 0..7 {
        d2.insert(p(i), st(p((i + 1) % 7)));
    }
    let f2 = Expr::and((1..7).map(|i| st(p(i)).not()));
    let pa = Afa::new(input_bits(2, 1), d2, st(p(0)), f2).unwrap();
    (qr, pa)
}

/// Both parts of [`mod35_parts`] in one automaton.
pub fn mod35() -> Afa {
    let (qr, pa) = mod35_parts();
    let mut delta = qr.delta().clone();
    delta.extend(pa.delta().clone());
    Afa::new(
        input_bits(2, 1),
        delta,
        Expr::and2(&st(0), &st(10)),
        Expr::and2(qr.final_formula(), pa.final_formula()),
    )
    .unwrap()
}

/// The language of [`mod35`], directly.
pub fn mod35_member(w: &[u32]) -> bool {
    let waits = |i: usize| w[i + 1..].iter().any(|c| *c >= abcd::C);
    w.len() % 35 == 0 && (0..w.len()).all(|i| w[i] >= abcd::C || waits(i))
}

pub const E1: u32 = 1;
pub const E2: u32 = 2;

fn e(id: u32, track: u32) -> Expr {
    Expr::atom(Atom::Eps { id, track })
}

fn a_on(track: u32, eps: u32) -> Expr {
    Expr::and2(&Expr::atom(Atom::Input { bit: 0, track }).not(), &e(eps, track).not())
}

fn b_on(track: u32, eps: u32) -> Expr {
    Expr::and2(&Expr::atom(Atom::Input { bit: 0, track }), &e(eps, track).not())
}

/// Binary relation `{(a, b)}` over `{a, b}`, with ε-bit [`E1`].
pub fn r1() -> Aft {
    aft(
        vec![
            (
                0,
                Expr::or2(
                    &Expr::and([a_on(1, E1), b_on(2, E1), st(1)]),
                    &Expr::and([a_on(1, E1), a_on(2, E1), st(1), st(2)]),
                ),
            ),
            (1, Expr::ff()),
            (2, Expr::and2(&e(E1, 1), &st(1))),
        ],
        st(0),
        Expr::and2(&st(0).not(), &st(2).not()),
        2,
        1,
        &[E1],
    )
}

/// Binary relation `{(a, bb)}`, with ε-bit [`E2`].
pub fn r2() -> Aft {
    aft(
        vec![
            (10, Expr::and([a_on(1, E2), b_on(2, E2), st(11)])),
            (11, Expr::and([e(E2, 1), b_on(2, E2), st(12)])),
            (12, Expr::ff()),
        ],
        st(10),
        Expr::and2(&st(10).not(), &st(11).not()),
        2,
        1,
        &[E2],
    )
}

/// Relates a string (track 1) to the version with every `'` preceded by a
/// backslash (track 2); 8 bits.
pub fn escaping() -> Aft {
    const AP: u32 = 0x27;
    const BC: u32 = 0x5C;
    let eps: BTreeSet<u32> = [E1].into();
    let ap1 = reads(AP, 8, 1, &eps);
    let not_ap1 = Expr::and2(&data(1, &eps), &char_formula(AP, 8, 1).not());
    let eq = Expr::and([data(1, &eps), data(2, &eps), same_char(1, 2, 8)]);
    aft(
        vec![
            (
                0,
                Expr::or2(&Expr::and([not_ap1, eq, st(0)]), &Expr::and([ap1, reads(BC, 8, 2, &eps), st(1)])),
            ),
            (1, Expr::and([e(E1, 1), reads(AP, 8, 2, &eps), st(0)])),
        ],
        st(0),
        st(1).not(),
        2,
        8,
        &[E1],
    )
}

/// The sanitizer scenario over two bits: `a` = 0, `c` = 1, `d` = 2.
pub mod running {
    use super::*;

    pub const BITS: u32 = 2;
    pub const A: u32 = 0;
    pub const C: u32 = 1;
    pub const D: u32 = 2;

    fn ch(code: u32, track: u32) -> Expr {
        char_formula(code, BITS, track)
    }

    /// Replaces `c` by `d` and refuses inputs containing `d`; tracks are
    /// (output, input).
    pub fn sanitizer() -> Aft {
        let q = fresh_state();
        let (input, output) = (2, 1);
        let mut parts = vec![st(q), ch(D, input).not(), Expr::implies(&ch(C, input), &ch(D, output))];
        for a in (0..1 << BITS).filter(|a| *a != C && *a != D) {
            parts.push(Expr::iff(&ch(a, input), &ch(a, output)));
        }
        aft(vec![(q, Expr::and(parts))], st(q), Expr::tt(), 2, BITS, &[])
    }

    /// Words with a `c` that is eventually followed by a `d`, and its three
    /// states.
    pub fn brackets() -> (Afa, [u32; 3]) {
        let r: [u32; 3] = std::array::from_fn(|_| fresh_state());
        let s = |i: usize| st(r[i]);
        let delta = [
            (r[0], Expr::or2(&Expr::and2(&s(0), &ch(C, 1).not()), &Expr::and2(&s(1), &ch(C, 1)))),
            (r[1], Expr::or2(&Expr::and2(&s(1), &ch(D, 1).not()), &Expr::and2(&s(2), &ch(D, 1)))),
            (r[2], Expr::tt()),
        ];
        let afa = Afa::new(
            input_bits(BITS, 1),
            delta.into_iter().collect(),
            s(0),
            Expr::and2(&s(0).not(), &s(1).not()),
        )
        .unwrap();
        (afa, r)
    }

    /// `y = R(x) ∧ z = x∘y ∧ z ∈ brackets`, and the states of `brackets`.
    pub fn literals() -> (Vec<Literal>, [u32; 3]) {
        let (afa, r) = brackets();
        let lits = vec![
            Literal::pos(Constraint::Transduction { lhs: "y".into(), aft: sanitizer(), arg: "x".into() }),
            Literal::pos(Constraint::Equation { lhs: "z".into(), rhs: vec![Term::var("x"), Term::var("y")] }),
            Literal::pos(Constraint::Regular { afa, var: "z".into() }),
        ];
        (lits, r)
    }

    pub fn sanitize(x: &[u32]) -> Option<Vec<u32>> {
        if x.contains(&D) {
            return None;
        }
        Some(x.iter().map(|c| if *c == C { D } else { *c }).collect())
    }

    pub fn c_then_d(w: &[u32]) -> bool {
        w.iter().position(|c| *c == C).is_some_and(|i| w[i..].contains(&D))
    }

    /// The same constraints as a script, with `c` = `\u{1}`, `d` = `\u{2}`.
    pub const SCRIPT: &str = r#"
(set-logic QF_S)
(declare-const x String)
(declare-const y String)
(declare-const z String)
(define-transducer R (init q) (final q)
  (q "\u{0}" "\u{0}" q) (q "\u{3}" "\u{3}" q) (q "\u{1}" "\u{2}" q))
(assert (= y (R x)))
(assert (= z (str.++ x y)))
(assert (str.in.re z (re.++ re.all (str.to.re "\u{1}") re.all (str.to.re "\u{2}") re.all)))
(check-sat)
(get-model)
"#;
}

/// Left-hand side and arguments of each conjunct; `~` marks regular
/// constraints and `!~` negated ones.
pub fn shape(f: &SlConjunction) -> Vec<String> {
    f.conjuncts
        .iter()
        .map(|c| match c {
            Conjunct::Equation { lhs, rhs } => {
                let r: Vec<String> = rhs
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => v.clone(),
                        Term::Const(w) => format!("{w:?}"),
                    })
                    .collect();
                format!("{lhs}={}", r.join("."))
            }
            Conjunct::Rational { lhs, args, .. } => format!("{lhs}=R({})", args.join(".")),
            Conjunct::Regular { var, negated, .. } => format!("{}{var}", if *negated { "!~" } else { "~" }),
        })
        .collect()
}

/// Five states accepting `{xwy : |xwy| even, x ∈ {a,b}, y ∈ {c,d}}`.
pub fn even_example() -> (Afa, [u32; 5]) {
    let q: [u32; 5] = std::array::from_fn(|_| fresh_state());
    let delta: BTreeMap<u32, Expr> = [
        (q[0], Expr::and([bit(1).not(), st(q[1]), st(q[3])])),
        (q[1], st(q[2])),
        (q[2], st(q[1])),
        (q[3], Expr::or([st(q[3]), Expr::and2(&bit(1), &st(q[4]))])),
        (q[4], Expr::ff()),
    ]
    .into();
    let fin = Expr::and([st(q[0]).not(), st(q[1]).not(), st(q[3]).not()]);
    (Afa::new(input_bits(2, 1), delta, st(q[0]), fin).unwrap(), q)
}

/// `q → Δ(q)` with successors primed, for every state.
pub fn step_formula(a: &Afa) -> Expr {
    Expr::and(a.delta().iter().map(|(q, d)| {
        let primed = d.rename(|x| match x {
            Atom::State(p) => Atom::Next(p),
            o => o,
        });
        Expr::implies(&st(*q), &primed)
    }))
}

/// Transition relation of the minimal encoding of [`even_example`].
pub fn even_minimal_trans(a: &Afa, q: &[u32; 5]) -> Expr {
    Expr::and([
        step_formula(a),
        next(q[0]).not(),
        Expr::implies(&next(q[1]), &Expr::or2(&st(q[0]), &st(q[2]))),
        Expr::implies(&next(q[2]), &st(q[1])),
        Expr::implies(
            &next(q[3]),
            &Expr::or2(&st(q[0]), &Expr::and2(&st(q[3]), &Expr::and2(&bit(1), &next(q[4])).not())),
        ),
        Expr::implies(&next(q[4]), &Expr::and2(&st(q[3]), &next(q[3]).not())),
    ])
}

/// Transition relation of the deterministic encoding of [`even_example`]
/// with branch flag `h`.
pub fn even_deterministic_trans(q: &[u32; 5], h: &Expr) -> Expr {
    Expr::and([
        next(q[0]).not(),
        Expr::iff(&next(q[1]), &Expr::or2(&st(q[0]), &st(q[2]))),
        Expr::iff(&next(q[2]), &st(q[1])),
        Expr::iff(&next(q[3]), &Expr::or2(&st(q[0]), &Expr::and2(&st(q[3]), h))),
        Expr::iff(&next(q[4]), &Expr::and2(&st(q[3]), &h.not())),
        Expr::implies(&st(q[0]), &bit(1).not()),
        Expr::implies(&Expr::and2(&st(q[3]), &h.not()), &bit(1)),
        st(q[4]).not(),
    ])
}
