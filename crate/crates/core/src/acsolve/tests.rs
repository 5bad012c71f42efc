// SPDX-License-Identifier: Apache-2.0

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::automata::{afa_from_regex, letter};
use crate::testgen::*;
use crate::transduce::{recognizes, recognizes_some, Word};

fn regex(src: &str) -> Afa {
    afa_from_regex(src, 1).unwrap()
}

fn afa_accepts(a: &Afa, w: &Word) -> bool {
    let letters: Vec<_> = w.iter().map(|c| letter(*c, 1)).collect();
    a.accepts(&letters).unwrap()
}

fn some_aft() -> Aft {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    random_aft(&mut rng, 2, 2, 0)
}

#[test]
fn acyclicity_examples() {
    let r = some_aft();
    let ok = AcFormula::and2(
        AcFormula::rational(r.clone(), &["x", "y"]),
        AcFormula::rational(r.clone(), &["y", "z"]),
    );
    assert!(check_acyclic(&ok).is_acyclic());
    let bad = AcFormula::and2(
        AcFormula::rational(r.clone(), &["x", "y"]),
        AcFormula::rational(r.clone(), &["x", "y"]),
    );
    assert_eq!(
        check_acyclic(&bad),
        Diagnosis::Violation {
            path: vec![1],
            kind: Violation::SharedVars(vars(&["x", "y"]))
        }
    );
    // φ1(x) ∧ (φ2(y) ∧ ψ(x, y))
    let nested = AcFormula::and2(
        AcFormula::regular(regex("\\x00*"), "x"),
        AcFormula::and2(
            AcFormula::regular(regex("\\x01*"), "y"),
            AcFormula::rational(r.clone(), &["x", "y"]),
        ),
    );
    assert!(check_acyclic(&nested).is_acyclic());
    let neg = AcFormula::Not(Box::new(AcFormula::rational(r.clone(), &["x", "y"])));
    assert!(matches!(
        check_acyclic(&neg),
        Diagnosis::Violation {
            kind: Violation::RationalUnderNegation,
            ..
        }
    ));
    // a negated disjunction is a conjunction
    let neg_or = AcFormula::Not(Box::new(AcFormula::Or(vec![
        AcFormula::regular(regex("\\x00"), "x"),
        AcFormula::Or(vec![
            AcFormula::regular(regex("\\x00"), "x"),
            AcFormula::regular(regex("\\x00"), "y"),
        ]),
    ])));
    assert!(check_acyclic(&neg_or).is_acyclic());
    let neg_or_bad = AcFormula::Not(Box::new(AcFormula::Or(vec![
        AcFormula::Or(vec![
            AcFormula::regular(regex("\\x00"), "x"),
            AcFormula::regular(regex("\\x00"), "y"),
        ]),
        AcFormula::Or(vec![
            AcFormula::regular(regex("\\x01"), "x"),
            AcFormula::regular(regex("\\x01"), "y"),
        ]),
    ])));
    assert!(!check_acyclic(&neg_or_bad).is_acyclic());
    let repeated = AcFormula::rational(r, &["x", "x"]);
    assert!(!check_acyclic(&repeated).is_acyclic());
}

#[test]
fn single_regular_constraint() {
    for src in ["(\\x00\\x01)*", "\\x01?\\x00+"] {
        let a = regex(src);
        let (t, vs) = compile_ac(&AcFormula::regular(a.clone(), "x"), 1).unwrap();
        assert_eq!(vs, vars(&["x"]));
        assert_eq!(t.tracks(), 1);
        for w in words(4, 2) {
            assert_eq!(rec(&t, &[w.clone()]), afa_accepts(&a, &w), "{src} {w:?}");
        }
    }
}

#[test]
fn negated_regular_constraints_are_complemented() {
    let f = AcFormula::And(vec![
        AcFormula::regular(regex("\\x00*\\x01*"), "x"),
        AcFormula::Not(Box::new(AcFormula::regular(regex("\\x00*"), "x"))),
    ]);
    let (t, _) = compile_ac(&f, 1).unwrap();
    for w in words(4, 2) {
        let expect = afa_accepts(&regex("\\x00*\\x01*"), &w) && !afa_accepts(&regex("\\x00*"), &w);
        assert_eq!(rec(&t, &[w.clone()]), expect, "{w:?}");
    }
}

#[test]
fn boolean_combinations_match_operands() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for round in 0..12 {
        let r = random_aft(&mut rng, 2, 2, 0);
        let s = random_aft(&mut rng, 2, 2, 0);
        let reg = regex(["\\x00*", "\\x01\\x00?", "(\\x00|\\x01)\\x01*"][round % 3]);
        let f = AcFormula::Or(vec![
            AcFormula::rational(r.clone(), &["x", "y"]),
            AcFormula::And(vec![
                AcFormula::rational(s.clone(), &["y", "z"]),
                AcFormula::regular(reg.clone(), "z"),
            ]),
        ]);
        let (t, vs) = compile_ac(&f, 1).unwrap();
        assert_eq!(vs, vars(&["x", "y", "z"]));
        for tup in tuples(3, 2, 2) {
            let expect = rec(&r, &tup[..2]) || (rec(&s, &tup[1..]) && afa_accepts(&reg, &tup[2]));
            assert_eq!(rec(&t, &tup), expect, "round {round} {tup:?}");
        }
    }
}

#[test]
fn the_same_transducer_twice() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let r = random_aft(&mut rng, 2, 2, 0);
    let f = AcFormula::and2(
        AcFormula::rational(r.clone(), &["x", "y"]),
        AcFormula::rational(r.clone(), &["y", "z"]),
    );
    let (t, _) = compile_ac(&f, 1).unwrap();
    for tup in tuples(3, 2, 2) {
        assert_eq!(rec(&t, &tup), rec(&r, &tup[..2]) && rec(&r, &tup[1..]));
    }
}

#[test]
fn parameter_free_elimination_is_identity() {
    let t = some_aft();
    let out = eliminate_params(&t);
    assert_eq!(out.base().init().id(), t.base().init().id());
    assert_eq!(out.base().final_formula().id(), t.base().final_formula().id());
    assert_eq!(out.num_states(), t.num_states());
}

#[test]
fn contradictory_parameter_empties_the_relation() {
    let t = some_aft();
    let s = Expr::atom(Atom::Param(0));
    let t = t
        .with_init_final(
            Expr::and2(t.base().init(), &s),
            Expr::and2(t.base().final_formula(), &s.not()),
        )
        .unwrap();
    let out = eliminate_params(&t);
    assert!(out.params().is_empty());
    assert!(relation(&out, 2).is_empty());
}

#[test]
fn two_rail_is_existential_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for round in 0..25 {
        let t = random_aft(&mut rng, 2, 3, 2);
        let (out, rails) = eliminate_params_with_rails(&t);
        assert!(out.params().is_empty());
        assert_eq!(rails.len(), t.params().len());
        for tup in tuples(2, 2, 2) {
            let expect = recognizes_some(&t, &tup, None).unwrap();
            let got = recognizes(&out, &tup, &Default::default(), None).unwrap();
            assert_eq!(got, expect, "round {round} {tup:?}");
        }
    }
}
