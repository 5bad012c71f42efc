// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::automata::{input_bits, word};
use crate::formula::equivalent;
use crate::testgen::random_positive;

const ENCODINGS: [Encoding; 3] = [Encoding::Direct, Encoding::Minimal, Encoding::Deterministic];

fn v(bit: u32) -> Expr {
    Expr::atom(Atom::Input { bit, track: 1 })
}

fn st(q: u32) -> Expr {
    Expr::state(q)
}

fn nx(q: u32) -> Expr {
    Expr::atom(Atom::Next(q))
}

/// The five-state automaton for `{xwy : |xwy| even, x ∈ {a,b}, y ∈ {c,d}}`.
fn even_example() -> (Afa, [u32; 5]) {
    let q: [u32; 5] = std::array::from_fn(|_| fresh_state());
    let delta: BTreeMap<u32, Expr> = [
        (q[0], Expr::and([v(1).not(), st(q[1]), st(q[3])])),
        (q[1], st(q[2])),
        (q[2], st(q[1])),
        (q[3], Expr::or([st(q[3]), Expr::and2(&v(1), &st(q[4]))])),
        (q[4], Expr::ff()),
    ]
    .into();
    let fin = Expr::and([st(q[0]).not(), st(q[1]).not(), st(q[3]).not()]);
    let a = Afa::new(input_bits(2, 1), delta, st(q[0]), fin).unwrap();
    (a, q)
}

/// Every assignment of `atoms`.
fn assignments(atoms: &[Atom]) -> Vec<Assignment> {
    (0u32..1 << atoms.len())
        .map(|m| {
            atoms
                .iter()
                .enumerate()
                .map(|(i, a)| (*a, m >> i & 1 == 1))
                .collect()
        })
        .collect()
}

fn eval(e: &Expr, parts: &[&Assignment]) -> bool {
    e.evaluate_with(|a| parts.iter().any(|p| p.get(a) == Some(true)))
}

/// `∃ hidden. a ⇔ ∃ hidden. b` for every assignment of `free`.
fn same_projection(a: &Expr, b: &Expr, free: &[Atom], hidden: &[Atom]) -> bool {
    let hs = assignments(hidden);
    assignments(free).iter().all(|f| {
        let ea = hs.iter().any(|h| eval(a, &[f, h]));
        let eb = hs.iter().any(|h| eval(b, &[f, h]));
        ea == eb
    })
}

fn cur_and_next(q: &[u32]) -> Vec<Atom> {
    q.iter()
        .map(|q| Atom::State(*q))
        .chain(q.iter().map(|q| Atom::Next(*q)))
        .collect()
}

#[test]
fn minimal_encoding_of_the_even_example() {
    let (a, q) = even_example();
    let ts = encode_minimal(&a);
    ts.check().unwrap();
    let init = Expr::and((0..5).map(|i| Expr::lit(Atom::State(q[i]), i == 0)));
    assert!(equivalent(&ts.init, &init));
    let step = step_formula(&a);
    let expected = Expr::and([
        step,
        nx(q[0]).not(),
        Expr::implies(&nx(q[1]), &Expr::or2(&st(q[0]), &st(q[2]))),
        Expr::implies(&nx(q[2]), &st(q[1])),
        Expr::implies(
            &nx(q[3]),
            &Expr::or2(
                &st(q[0]),
                &Expr::and2(&st(q[3]), &Expr::and2(&v(1), &nx(q[4])).not()),
            ),
        ),
        Expr::implies(&nx(q[4]), &Expr::and2(&st(q[3]), &nx(q[3]).not())),
    ]);
    let vs: Vec<Atom> = input_bits(2, 1).into_iter().collect();
    assert!(same_projection(&ts.trans, &expected, &cur_and_next(&q), &vs));
}

#[test]
fn deterministic_encoding_of_the_even_example() {
    let (a, q) = even_example();
    let det = encode_deterministic(&a);
    det.check().unwrap();
    assert_eq!(det.states.len(), 5, "a single initial state needs no extra state");
    assert_eq!(det.hvars.len(), 1);
    let h = Expr::atom(det.hvars[0]);
    let init = Expr::and((0..5).map(|i| Expr::lit(Atom::State(q[i]), i == 0)));
    assert!(equivalent(&det.init, &init));
    let vs: Vec<Atom> = input_bits(2, 1).into_iter().collect();
    let mut hidden = vs.clone();
    hidden.push(det.hvars[0]);
    // the branch flag may come out with either polarity
    let expected = |h3: &Expr| {
        Expr::and([
            nx(q[0]).not(),
            Expr::iff(&nx(q[1]), &Expr::or2(&st(q[0]), &st(q[2]))),
            Expr::iff(&nx(q[2]), &st(q[1])),
            Expr::iff(&nx(q[3]), &Expr::or2(&st(q[0]), &Expr::and2(&st(q[3]), h3))),
            Expr::iff(&nx(q[4]), &Expr::and2(&st(q[3]), &h3.not())),
            Expr::implies(&st(q[0]), &v(1).not()),
            Expr::implies(&Expr::and2(&st(q[3]), &h3.not()), &v(1)),
            st(q[4]).not(),
        ])
    };
    assert!(
        equivalent(&det.trans, &expected(&h)) || equivalent(&det.trans, &expected(&h.not())),
        "{}",
        det.trans
    );
    // and here it coincides with the minimal encoding
    let im = encode_minimal(&a);
    assert!(same_projection(&det.trans, &im.trans, &cur_and_next(&q), &hidden));
}

#[test]
fn even_example_is_nonempty_in_every_encoding() {
    let (a, q) = even_example();
    for enc in ENCODINGS {
        let ts = encode(&a, enc);
        let ReachResult::Reachable(t) = check_reach(&ts, &ReachOptions::default()) else {
            panic!("{enc}: expected a witness");
        };
        assert!(t.replays(&ts), "{enc}");
        assert_eq!(t.len(), 2, "{enc}: shortest witness has two letters");
        assert!(a.accepts(&t.word()).unwrap(), "{enc}");
        if enc != Encoding::Deterministic {
            assert_eq!(t.configs[1], BTreeSet::from([q[1], q[3]]));
            assert_eq!(t.configs[2], BTreeSet::from([q[2], q[4]]));
        }
    }
}

fn random_afa(rng: &mut ChaCha8Rng, n: usize) -> Afa {
    let letters: Vec<Atom> = input_bits(1, 1).into_iter().collect();
    let states: Vec<u32> = (0..n).map(|_| fresh_state()).collect();
    let delta = states
        .iter()
        .map(|q| (*q, random_positive(rng, &states, &letters, 2)))
        .collect();
    let init = random_positive(rng, &states, &[], 1);
    let fin = random_positive(rng, &states, &[], 1).not().nnf();
    Afa::new(input_bits(1, 1), delta, init, fin).unwrap()
}

/// Reachability over all configurations, successors by enumeration.
fn brute_nonempty(a: &Afa) -> bool {
    let states: Vec<u32> = a.states().collect();
    let all: Vec<BTreeSet<u32>> = (0u32..1 << states.len())
        .map(|m| {
            (0..states.len())
                .filter(|i| m >> i & 1 == 1)
                .map(|i| states[i])
                .collect()
        })
        .collect();
    let holds = |e: &Expr, c: &BTreeSet<u32>, l: &Assignment| {
        e.evaluate_with(|x| match x {
            Atom::State(q) => c.contains(&q),
            o => l.get(o).unwrap_or(false),
        })
    };
    let none = Assignment::new();
    let mut seen: HashSet<BTreeSet<u32>> = all
        .iter()
        .filter(|c| holds(a.init(), c, &none))
        .cloned()
        .collect();
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

#[test]
fn emptiness_agrees_with_subset_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_8a);
    let mut nonempty = 0;
    for _ in 0..60 {
        let n = rng.gen_range(1..=4);
        let a = random_afa(&mut rng, n);
        let expect = brute_nonempty(&a);
        nonempty += expect as usize;
        for enc in ENCODINGS {
            let ts = encode(&a, enc);
            ts.check().unwrap();
            for antichain in [true, false] {
                let opts = ReachOptions {
                    antichain,
                    ..Default::default()
                };
                let r = check_reach(&ts, &opts);
                assert_eq!(r.is_reachable(), expect, "{enc} antichain={antichain}");
                if let ReachResult::Reachable(t) = r {
                    assert!(t.replays(&ts));
                    assert!(a.accepts(&t.word()).unwrap());
                }
            }
        }
    }
    assert!(nonempty > 5 && nonempty < 55, "degenerate sample: {nonempty}");
}

#[test]
fn budget_is_reported() {
    let (a, _) = even_example();
    let opts = ReachOptions {
        max_configs: 0,
        ..Default::default()
    };
    assert_eq!(
        check_reach(&encode_direct(&a), &opts),
        ReachResult::BudgetExceeded { explored: 1 }
    );
}

#[test]
fn several_initial_states_are_normalised() {
    let q: [u32; 2] = std::array::from_fn(|_| fresh_state());
    // q0 reads a 1 and stops, q1 reads a 0 and stops; I = q0 ∧ q1
    let delta: BTreeMap<u32, Expr> = [(q[0], v(0)), (q[1], v(0).not())].into();
    let fin = Expr::and2(&st(q[0]).not(), &st(q[1]).not());
    let both = Afa::new(input_bits(1, 1), delta.clone(), Expr::and2(&st(q[0]), &st(q[1])), fin.clone())
        .unwrap();
    let either = Afa::new(input_bits(1, 1), delta, Expr::or2(&st(q[0]), &st(q[1])), fin).unwrap();
    for enc in ENCODINGS {
        assert!(!is_empty(&both, enc, &Default::default()).is_reachable(), "{enc}");
        let ReachResult::Reachable(t) = is_empty(&either, enc, &Default::default()) else {
            panic!("{enc}");
        };
        assert_eq!(t.len(), 1);
    }
    let det = encode_deterministic(&either);
    assert_eq!(det.states.len(), 3);
    // the empty word: accepted iff an initial configuration is final
    let eps = Afa::new(input_bits(1, 1), [(q[0], v(0))].into(), Expr::or2(&st(q[0]), &Expr::tt()), st(q[0]).not())
        .unwrap();
    let r = is_empty(&eps, Encoding::Deterministic, &Default::default());
    assert!(matches!(r, ReachResult::Reachable(t) if t.is_empty()));
}

#[test]
fn bounded_layers_follow_the_automaton() {
    let (a, q) = even_example();
    let layers = bounded_layers(&encode_direct(&a), 3);
    assert_eq!(layers[0], BTreeSet::from([BTreeSet::from([q[0]])]));
    assert_eq!(layers[1], BTreeSet::from([BTreeSet::from([q[1], q[3]])]));
    assert_eq!(
        layers[2],
        BTreeSet::from([BTreeSet::from([q[2], q[3]]), BTreeSet::from([q[2], q[4]])])
    );
    assert_eq!(
        layers[3],
        BTreeSet::from([BTreeSet::from([q[1], q[3]]), BTreeSet::from([q[1], q[4]])])
    );
}

#[test]
fn trivial_system_exports_one_latch() {
    let q = fresh_state();
    let ts = TransSys {
        states: vec![q],
        inputs: vec![],
        hvars: vec![],
        init: st(q).not(),
        trans: Expr::iff(&nx(q), &st(q)),
        fin: st(q),
        encoding: Encoding::Deterministic,
        updates: Some(([(q, st(q))].into(), Expr::tt())),
    };
    let (aig, layout) = export_aiger(&ts);
    assert!(!layout.reset_gadget);
    let text = aig.to_text();
    assert_eq!(text.lines().next(), Some("aag 1 0 1 1 0"));
    assert_eq!(Aiger::parse(&text).unwrap(), aig);
}

#[test]
fn malformed_aiger_is_rejected() {
    for (src, line) in [
        ("", 1),
        ("aig 0 0 0 0 0\n", 1),
        ("aag 1 1 0 0 0\nx\n", 2),
        ("aag 2 0 0 1 1\n4\n4 2 2\n", 0),
        ("aag 1 0 1 0 0\n2 2 7\n", 2),
    ] {
        match Aiger::parse(src) {
            Err(AigerError::Syntax { line: l, .. }) => assert_eq!(l, line, "{src:?}"),
            Ok(_) => panic!("accepted {src:?}"),
        }
    }
}

fn named(aig: &Aiger, on: &[String]) -> Vec<bool> {
    let m: BTreeMap<String, bool> = on.iter().map(|n| (n.clone(), true)).collect();
    input_vector(aig, &m)
}

#[test]
fn even_example_run_raises_the_output() {
    let (a, q) = even_example();
    let ts = encode_direct(&a);
    let (aig, layout) = export_aiger(&ts);
    assert!(layout.reset_gadget && layout.relational);
    let aig = Aiger::parse(&aig.to_text()).unwrap();
    let choose = |qs: &[u32]| qs.iter().map(|q| format!("n{q}")).collect::<Vec<_>>();
    let v1 = Atom::Input { bit: 1, track: 1 }.to_string();
    let steps = [
        choose(&[q[0]]),
        choose(&[q[1], q[3]]),
        [choose(&[q[2], q[4]]), vec![v1]].concat(),
    ];
    let mut latches = aig.reset();
    let mut outs = vec![];
    for s in &steps {
        let (next, o) = aig.step(&latches, &named(&aig, s));
        outs.push(o[0]);
        latches = next;
    }
    let (_, o) = aig.step(&latches, &named(&aig, &[]));
    outs.push(o[0]);
    assert_eq!(outs, [false, false, false, true]);
    // reading `b` last (v1 off) breaks the q3 → q4 step
    let mut latches = aig.reset();
    for s in &steps[..2] {
        latches = aig.step(&latches, &named(&aig, s)).0;
    }
    latches = aig.step(&latches, &named(&aig, &choose(&[q[2], q[4]]))).0;
    assert!(!aig.step(&latches, &named(&aig, &[])).1[0]);
}

/// Per frame, the ⊆-minimal state sets of valid runs, offset removed.
fn aiger_layers(ts: &TransSys, frames: usize) -> Vec<BTreeSet<BTreeSet<u32>>> {
    let (aig, layout) = export_aiger(ts);
    let aig = Aiger::parse(&aig.to_text()).unwrap();
    let broken = aig.latch_index("broken");
    let started = aig.latch_index("started");
    let vectors: Vec<Vec<bool>> = (0u32..1 << aig.inputs.len())
        .map(|m| (0..aig.inputs.len()).map(|i| m >> i & 1 == 1).collect())
        .collect();
    let mut frontier: HashSet<Vec<bool>> = [aig.reset()].into();
    let mut out = vec![];
    for k in 0..frames + layout.reset_gadget as usize {
        if k >= layout.reset_gadget as usize {
            let configs = frontier
                .iter()
                .filter(|l| broken.map_or(true, |b| !l[b]))
                .filter(|l| started.map_or(true, |s| l[s]))
                .map(|l| {
                    ts.states
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| l[*i])
                        .map(|(_, q)| *q)
                        .collect()
                });
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

#[test]
fn exported_circuits_match_bounded_layers() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa1_6e);
    for _ in 0..50 {
        let n = rng.gen_range(1..=3);
        let a = random_afa(&mut rng, n);
        for enc in ENCODINGS {
            let ts = encode(&a, enc);
            assert_eq!(aiger_layers(&ts, 4), bounded_layers(&ts, 3), "{enc}");
        }
    }
}

#[test]
fn exported_output_matches_emptiness() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0b_ad);
    for _ in 0..30 {
        let n = rng.gen_range(1..=3);
        let a = random_afa(&mut rng, n);
        let ts = encode_direct(&a);
        let (aig, _) = export_aiger(&ts);
        let vectors: Vec<Vec<bool>> = (0u32..1 << aig.inputs.len())
            .map(|m| (0..aig.inputs.len()).map(|i| m >> i & 1 == 1).collect())
            .collect();
        let mut seen: HashSet<Vec<bool>> = [aig.reset()].into();
        let mut todo = vec![aig.reset()];
        let mut bad = false;
        while let Some(l) = todo.pop() {
            for i in &vectors {
                let (next, o) = aig.step(&l, i);
                bad |= o[0];
                if seen.insert(next.clone()) {
                    todo.push(next);
                }
            }
        }
        assert_eq!(bad, brute_nonempty(&a));
    }
}

#[test]
fn words_of_witnesses_are_accepted() {
    let (a, _) = even_example();
    assert!(a.accepts(&word(&[0, 2], 2)).unwrap());
    assert!(!a.accepts(&word(&[2, 0], 2)).unwrap());
}
