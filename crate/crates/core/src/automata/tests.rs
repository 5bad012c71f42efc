// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::formula::{equivalent, Atom, Expr};

const A: u32 = 0;
const B: u32 = 1;
const C: u32 = 2;
const D: u32 = 3;

fn v(bit: u32) -> Expr {
    Expr::atom(Atom::Input { bit, track: 1 })
}

fn st(q: u32) -> Expr {
    Expr::state(q)
}

// Explicit oracle: the set of every configuration reachable on the word,
// computed by evaluating Δ on all subsets of states.
fn brute_accepts(a: &Afa, w: &[Assignment]) -> bool {
    let states: Vec<u32> = a.states().collect();
    let n = states.len();
    let as_set = |mask: u32| -> BTreeSet<u32> {
        (0..n).filter(|i| mask >> i & 1 == 1).map(|i| states[i]).collect()
    };
    let mut current: BTreeSet<u32> = (0..1u32 << n)
        .filter(|m| a.init_holds(&as_set(*m)))
        .collect();
    for letter in w {
        let mut next = BTreeSet::new();
        for pre in &current {
            let pre_set = as_set(*pre);
            for post in 0..1u32 << n {
                let post_set = as_set(post);
                let ok = pre_set.iter().all(|q| {
                    a.transition(*q).evaluate_with(|at| match at {
                        Atom::State(p) => post_set.contains(&p),
                        other => letter.get(other).unwrap_or(false),
                    })
                });
                if ok {
                    next.insert(post);
                }
            }
        }
        current = next;
    }
    current.iter().any(|m| a.final_holds(&as_set(*m)))
}

fn all_words(len: usize, bits: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    let mut layer = vec![vec![]];
    for _ in 0..len {
        let mut next = Vec::new();
        for w in &layer {
            for c in 0..1u32 << bits {
                let mut x: Vec<u32> = w.clone();
                x.push(c);
                next.push(x);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn random_positive(rng: &mut ChaCha8Rng, states: &[u32], depth: u32, with_inputs: bool) -> Expr {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..if with_inputs { 4 } else { 2 }) {
            0 | 1 => st(states[rng.gen_range(0..states.len())]),
            2 => Expr::lit(Atom::Input { bit: rng.gen_range(0..2), track: 1 }, rng.gen()),
            _ => Expr::constant(rng.gen_bool(0.7)),
        };
    }
    let k = rng.gen_range(2..4);
    let kids: Vec<Expr> = (0..k)
        .map(|_| random_positive(rng, states, depth - 1, with_inputs))
        .collect();
    if rng.gen() {
        Expr::and(kids)
    } else {
        Expr::or(kids)
    }
}

fn random_afa(rng: &mut ChaCha8Rng, n: usize) -> Afa {
    let states: Vec<u32> = (0..n as u32).collect();
    let delta: BTreeMap<u32, Expr> = states
        .iter()
        .map(|q| (*q, random_positive(rng, &states, 2, true)))
        .collect();
    let init = random_positive(rng, &states, 1, false);
    let fin = random_positive(rng, &states, 1, false).not().nnf();
    Afa::new(input_bits(2, 1), delta, init, fin).unwrap()
}

fn random_nfa(rng: &mut ChaCha8Rng, n: u32) -> Afa {
    let mut delta = BTreeMap::new();
    for q in 0..n {
        let mut terms = Vec::new();
        for p in 0..n {
            if rng.gen_bool(0.5) {
                let codes: Vec<(u32, u32)> =
                    (0..4).filter(|_| rng.gen_bool(0.5)).map(|c| (c, c)).collect();
                terms.push(Expr::and2(&char_class_formula(&codes, 2, 1), &st(p)));
            }
        }
        delta.insert(q, Expr::or(terms));
    }
    let fin = Expr::and((0..n).filter(|_| rng.gen_bool(0.5)).map(|q| st(q).not()));
    Afa::new(input_bits(2, 1), delta, st(0), fin).unwrap()
}

// the mod-35 automaton: q-states count mod 5 and spawn r-runs on a/b,
// p-states count mod 7
fn mod35_parts() -> (Afa, Afa) {
    let (q, p, r1, r2) = (|i: u32| i, |i: u32| 10 + i, 20, 21);
    let mut d1 = BTreeMap::new();
    for i in 0..5 {
        let nxt = st(q((i + 1) % 5));
        d1.insert(
            q(i),
            Expr::or2(
                &Expr::and([v(1).not(), nxt.clone(), st(r1)]),
                &Expr::and2(&v(1), &nxt),
            ),
        );
    }
    d1.insert(
        r1,
        Expr::or2(&Expr::and2(&v(1), &st(r2)), &Expr::and2(&v(1).not(), &st(r1))),
    );
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

fn mod35() -> Afa {
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

#[test]
fn letter_encoding() {
    // {c, d} is just v1
    assert!(equivalent(&char_class_formula(&[(C, D)], 2, 1), &v(1)));
    assert!(equivalent(
        &char_formula(B, 2, 1),
        &Expr::and2(&v(1).not(), &v(0))
    ));
    assert_eq!(letter(C, 2).get(Atom::Input { bit: 1, track: 1 }), Some(true));
}

#[test]
fn mod35_membership() {
    let a = mod35();
    let mut w: Vec<u32> = vec![A; 34];
    w.push(C);
    let start = Instant::now();
    assert!(a.accepts(&word(&w, 2)).unwrap());
    assert!(start.elapsed() < Duration::from_secs(2));
    assert!(a.accepts(&[]).unwrap());
    assert!(!a.accepts(&word(&[A], 2)).unwrap());
    let (qr, pa) = mod35_parts();
    assert!(!(brute_accepts(&qr, &word(&[A], 2)) && brute_accepts(&pa, &word(&[A], 2))));
    let mut miss = w.clone();
    *miss.last_mut().unwrap() = B;
    assert!(!a.accepts(&word(&miss, 2)).unwrap());
    assert!(!a.accepts(&word(&w[1..], 2)).unwrap());
}

#[test]
fn mod35_is_an_intersection() {
    let (qr, pa) = mod35_parts();
    let both = combine(&qr, &pa, CombineKind::Intersection);
    let whole = mod35();
    for w in all_words(3, 2) {
        let w = word(&w, 2);
        assert_eq!(both.accepts(&w).unwrap(), whole.accepts(&w).unwrap());
    }
}

#[test]
fn constructor_rejects_bad_polarity() {
    let mut delta = BTreeMap::new();
    delta.insert(0, st(0).not());
    assert_eq!(
        Afa::new(input_bits(1, 1), delta.clone(), st(0), Expr::tt()).unwrap_err(),
        AutomataError::NonPositiveTransition { state: 0 }
    );
    delta.insert(0, st(0));
    assert_eq!(
        Afa::new(input_bits(1, 1), delta.clone(), st(0).not(), Expr::tt()).unwrap_err(),
        AutomataError::NonPositiveInit
    );
    assert_eq!(
        Afa::new(input_bits(1, 1), delta.clone(), st(0), st(0)).unwrap_err(),
        AutomataError::NonNegativeFinal
    );
    assert!(matches!(
        Afa::new(input_bits(1, 1), delta, st(3), Expr::tt()),
        Err(AutomataError::MissingTransition(3))
    ));
}

#[test]
fn alphabet_mismatch_is_reported() {
    let a = Afa::universal(input_bits(2, 1));
    let bad = letter(1, 3);
    assert!(matches!(
        a.accepts(&[bad]),
        Err(AutomataError::AlphabetMismatch(_))
    ));
}

#[test]
fn union_with_empty_is_neutral() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let a = random_afa(&mut rng, 3);
        let u = combine(&a, &Afa::empty(input_bits(2, 1)), CombineKind::Union);
        for w in all_words(4, 2) {
            let w = word(&w, 2);
            assert_eq!(u.accepts(&w).unwrap(), a.accepts(&w).unwrap());
        }
    }
}

#[test]
fn self_intersection_keeps_language() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let a = random_afa(&mut rng, 3);
        let i = combine(&a, &a, CombineKind::Intersection);
        assert_eq!(i.num_states(), 2 * a.num_states());
        for w in all_words(4, 2) {
            let w = word(&w, 2);
            assert_eq!(i.accepts(&w).unwrap(), brute_accepts(&a, &w));
        }
    }
}

#[test]
fn combine_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..25 {
        let n1 = rng.gen_range(1..5);
        let n2 = rng.gen_range(1..5);
        let a1 = random_afa(&mut rng, n1);
        let a2 = random_afa(&mut rng, n2);
        let u = combine(&a1, &a2, CombineKind::Union);
        let i = combine(&a1, &a2, CombineKind::Intersection);
        for w in all_words(4, 2) {
            let w = word(&w, 2);
            let (x, y) = (brute_accepts(&a1, &w), brute_accepts(&a2, &w));
            assert_eq!(u.accepts(&w).unwrap(), x || y);
            assert_eq!(i.accepts(&w).unwrap(), x && y);
        }
    }
}

#[test]
fn minimal_search_matches_unpruned() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..30 {
        let n = rng.gen_range(1..6);
        let a = random_afa(&mut rng, n);
        for w in all_words(3, 2) {
            let w = word(&w, 2);
            let m = a.accepts(&w).unwrap();
            assert_eq!(m, a.accepts_unpruned(&w).unwrap());
            assert_eq!(m, brute_accepts(&a, &w));
        }
    }
}

#[test]
fn complement_of_universal_is_empty() {
    let mut delta = BTreeMap::new();
    delta.insert(0, st(0));
    let u = Afa::new(input_bits(2, 1), delta, st(0), Expr::tt()).unwrap();
    let c = complement(&u);
    c.check().unwrap();
    for w in all_words(4, 2) {
        assert!(!c.accepts(&word(&w, 2)).unwrap());
    }
}

#[test]
fn complement_of_random_nfas() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..200 {
        let a = random_nfa(&mut rng, 3);
        assert!(a.is_nfa());
        let c = complement(&a);
        c.check().unwrap();
        for w in all_words(3, 2) {
            let w = word(&w, 2);
            assert_ne!(brute_accepts(&a, &w), brute_accepts(&c, &w));
        }
    }
}

#[test]
fn complement_of_alternating_automata() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..40 {
        let n = rng.gen_range(1..4);
        let a = random_afa(&mut rng, n);
        let c = complement(&a);
        let cc = complement(&c);
        for w in all_words(3, 2) {
            let w = word(&w, 2);
            let x = brute_accepts(&a, &w);
            assert_ne!(x, brute_accepts(&c, &w));
            assert_eq!(x, brute_accepts(&cc, &w));
        }
    }
}

fn codes(s: &str) -> Vec<u32> {
    s.chars().map(|c| c as u32).collect()
}

#[test]
fn regex_literal_word() {
    let a = afa_from_regex("ab", 8).unwrap();
    assert!(a.is_nfa());
    assert!(a.accepts(&word(&codes("ab"), 8)).unwrap());
    for w in ["", "a", "b", "ba", "abb", "aba"] {
        assert!(!a.accepts(&word(&codes(w), 8)).unwrap(), "{w}");
    }
}

#[test]
fn regex_agrees_with_reference_matcher() {
    let a = afa_from_regex("(a|b)*c", 8).unwrap();
    let reference = ::regex::Regex::new("^(a|b)*c$").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let len = rng.gen_range(0..7);
        let s: String = (0..len).map(|_| ['a', 'b', 'c', 'd'][rng.gen_range(0..4)]).collect();
        assert_eq!(
            a.accepts(&word(&codes(&s), 8)).unwrap(),
            reference.is_match(&s),
            "{s}"
        );
    }
}

#[test]
fn regex_negated_class() {
    let a = afa_from_regex("[^']*", 8).unwrap();
    assert!(a.accepts(&word(&codes("x"), 8)).unwrap());
    assert!(!a.accepts(&word(&codes("'"), 8)).unwrap());
    assert!(a.accepts(&[]).unwrap());
}

#[test]
fn regex_syntax() {
    assert!(parse_regex("(ab").is_err());
    assert!(parse_regex("ab)").is_err());
    assert!(parse_regex("*a").is_err());
    assert!(parse_regex("[a-").is_err());
    assert_eq!(
        parse_regex("[a-c]").unwrap(),
        Regex::Class(vec![('a' as u32, 'c' as u32)])
    );
    assert!(afa_from_regex("é", 7).is_err());
    let a = afa_from_regex("a?b+\\x41.", 8).unwrap();
    assert!(a.accepts(&word(&codes("bbAz"), 8)).unwrap());
    assert!(a.accepts(&word(&codes("abA!"), 8)).unwrap());
    assert!(!a.accepts(&word(&codes("aA!"), 8)).unwrap());
}

#[test]
fn class_formula_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for _ in 0..50 {
        let ranges: Vec<(u32, u32)> = (0..rng.gen_range(0..4))
            .map(|_| {
                let a = rng.gen_range(0..32);
                (a, (a + rng.gen_range(0..6)).min(31))
            })
            .collect();
        let f = char_class_formula(&ranges, 5, 1);
        for code in 0..32 {
            let inside = ranges.iter().any(|(a, b)| *a <= code && code <= *b);
            assert_eq!(f.evaluate(&letter(code, 5)).unwrap(), inside);
        }
    }
}
