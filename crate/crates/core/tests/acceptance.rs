// SPDX-License-Identifier: Apache-2.0

//! Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on
//! any failure.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use strsolve::acsolve::{check_acyclic, eliminate_params_with_rails, AcFormula};
use strsolve::automata::{char_class_formula, char_formula, input_bits, letter, word};
use strsolve::cli::{self, SolveOptions, Verdict};
use strsolve::formula::{equivalent, is_sat, Atom, Expr};
use strsolve::par;
use strsolve::reach::{
    bounded_layers, check_reach, encode, encode_deterministic, encode_direct, encode_minimal, Aiger,
    Encoding, ReachOptions, ReachResult,
};
use strsolve::slsolve::{
    classify, preprocess, reorder, run_pipeline, split_binary_traced, substitute_equations, to_sl,
    Conjunct, Fragment, Recon,
};
use strsolve::transduce::{aft_combine, codes, recognizes, recognizes_some, Junction, TransduceError, Word};
use strsolve_testkit::fixtures::{self, abcd, running};
use strsolve_testkit::gen::{random_afa, random_aft, random_sl};
use strsolve_testkit::oracle::{aiger_layers, brute_nonempty, relation, same_projection, tuples, words};
use strsolve_testkit::script::{random_bounded_script, random_sl_script, satisfies, witness};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn verdict(r: &ReachResult) -> Result<bool, String> {
    match r {
        ReachResult::Reachable(_) => Ok(true),
        ReachResult::Unreachable => Ok(false),
        ReachResult::BudgetExceeded { explored } => Err(format!("budget exceeded after {explored}")),
    }
}

fn letter_encoding() -> Result<(), String> {
    let v1 = fixtures::bit(1);
    ensure!(equivalent(&char_class_formula(&[(abcd::C, abcd::D)], 2, 1), &v1), "{{c,d}} is not v1");
    let b = Expr::and2(&v1.not(), &fixtures::bit(0));
    ensure!(equivalent(&char_formula(abcd::B, 2, 1), &b), "b is not ¬v1 ∧ v0");
    ensure!(letter(abcd::C, 2).get(Atom::Input { bit: 1, track: 1 }) == Some(true), "c lacks v1");
    Ok(())
}

fn mod35_membership() -> Result<(), String> {
    use abcd::*;
    let a = fixtures::mod35();
    let mut good = vec![A; 34];
    good.push(C);
    ensure!(fixtures::mod35_member(&good), "reference rejects the compliant word");
    let start = Instant::now();
    let ok = a.accepts(&word(&good, 2)).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure!(ok, "compliant word rejected");
    ensure!(took < Duration::from_secs(2), "membership took {took:?}");
    let with = |w: &[u32], i: usize, c: u32| {
        let mut x = w.to_vec();
        x[i] = c;
        x
    };
    let misses: Vec<Vec<u32>> = vec![
        with(&good, 34, B),
        with(&good, 34, A),
        good[1..].to_vec(),
        [good.clone(), vec![C]].concat(),
        [vec![C], vec![A; 34]].concat(),
        [vec![A; 33], vec![C, A]].concat(),
        vec![B; 35],
        vec![C],
        [good.clone(), vec![A; 35]].concat(),
        [vec![D; 34], vec![A]].concat(),
    ];
    for m in &misses {
        ensure!(!fixtures::mod35_member(m), "near-miss {m:?} is in the language");
        ensure!(!a.accepts(&word(m, 2)).map_err(|e| e.to_string())?, "near-miss {m:?} accepted");
    }
    Ok(())
}

fn escaping() -> Result<(), String> {
    let t = fixtures::escaping();
    let rec = |x: &str, y: &str| recognizes_some(&t, &[codes(x), codes(y)], None).unwrap();
    ensure!(rec("x'xx", "x\\'xx"), "(x'xx, x\\'xx) not recognised");
    ensure!(!rec("x'xx", "x'xx"), "unescaped output recognised");
    ensure!(rec("''", "\\'\\'"), "double quote not escaped");
    Ok(())
}

fn synchronised_relation() -> Result<(), String> {
    let xs = |v: &[&str]| strings(v);
    let (t, order) = aft_combine(&fixtures::r1(), &xs(&["x", "y"]), &fixtures::r2(), &xs(&["x", "z"]), Junction::And)
        .map_err(|e| e.to_string())?;
    ensure!(order == xs(&["x", "y", "z"]), "track order {order:?}");
    let expect: BTreeSet<Vec<Word>> = [vec![vec![0], vec![1], vec![1, 1]]].into();
    let got = relation(&t, 3);
    ensure!(got == expect, "relation {got:?}");
    let r = fixtures::r1();
    let clash = aft_combine(&r, &xs(&["x", "y"]), &r.clone(), &xs(&["x", "z"]), Junction::And);
    ensure!(matches!(clash, Err(TransduceError::EpsCollision(_))), "shared ε-bit accepted: {clash:?}");
    Ok(())
}

fn pipeline_shapes() -> Result<(), String> {
    let (lits, r) = running::literals();
    ensure!(classify(&lits) == Fragment::Sl, "not classified as straight-line");
    let sl = to_sl(&lits, running::BITS).map_err(|e| e.to_string())?;
    let s = substitute_equations(&preprocess(&sl).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let got = fixtures::shape(&s);
    ensure!(got == strings(&["y=R(x)", "z'=R(x.y)"]), "after substitution {got:?}");
    let concat = Recon::Concat { var: "z".into(), parts: strings(&["x", "y"]) };
    ensure!(s.recon == vec![concat], "recon {:?}", s.recon);
    let Conjunct::Rational { aft: whole, .. } = &s.conjuncts[1] else {
        return Err("second conjunct is not rational".into());
    };
    let (split, totals) = split_binary_traced(&s).map_err(|e| e.to_string())?;
    let got = fixtures::shape(&split);
    ensure!(got == strings(&["y=R(x)", "z'#L=R(x)", "z'#R=R(y)"]), "after splitting {got:?}");
    ensure!(totals == vec![1, 0], "weights {totals:?}");
    let (Conjunct::Rational { aft: s1, .. }, Conjunct::Rational { aft: s2, .. }) =
        (&split.conjuncts[1], &split.conjuncts[2])
    else {
        return Err("halves are not rational".into());
    };
    let params: Vec<u32> = s1.params().into_iter().collect();
    ensure!(params.len() == 3 && s2.params() == s1.params(), "parameters {params:?} / {:?}", s2.params());
    // the parameter of r_i is the one the first half's final formula ties to r_i
    let owner = |q: u32| {
        params.iter().copied().find(|t| {
            let only_q = Expr::and(
                r.iter()
                    .map(|x| Expr::lit(Atom::State(*x), *x == q))
                    .chain([Expr::lit(Atom::Param(*t), false)]),
            );
            !is_sat(&Expr::and2(s1.base().final_formula(), &only_q))
        })
    };
    let ts: Vec<u32> = r.iter().map(|q| owner(*q).ok_or("no parameter per state")).collect::<Result<_, _>>()?;
    let p = |i: usize| Expr::atom(Atom::Param(ts[i]));
    let f1 = Expr::and((0..3).map(|i| Expr::implies(&Expr::state(r[i]), &p(i))));
    let i2 = Expr::and((0..3).map(|i| Expr::implies(&p(i), &Expr::state(r[i]))));
    ensure!(equivalent(s1.base().final_formula(), &f1), "F1 differs");
    ensure!(equivalent(s2.base().init(), &i2), "I2 differs");
    let amo = Expr::and((0..3).flat_map(|i| (i + 1..3).map(move |j| (i, j))).map(|(i, j)| Expr::or2(&p(i).not(), &p(j).not())));
    ensure!(equivalent(s1.base().init(), &Expr::and2(whole.base().init(), &amo)), "I1 differs from I with one crossing");
    ensure!(equivalent(s2.base().final_formula(), whole.base().final_formula()), "F2 differs from F");
    let ac = reorder(&split).map_err(|e| e.to_string())?;
    ensure!(check_acyclic(&ac).is_acyclic(), "reordered formula is not acyclic");
    let (ac2, _) = run_pipeline(&sl).map_err(|e| e.to_string())?;
    ensure!(matches!(ac2, AcFormula::And(_)), "pipeline result is not a conjunction");

    let f = cli::parse(running::SCRIPT, running::BITS).map_err(|e| e.to_string())?;
    let opts = SolveOptions { bits: running::BITS, ..Default::default() };
    let Verdict::Sat(m) = cli::solve(&f, &opts) else {
        return Err("script is not sat".into());
    };
    let (x, y, z) = (&m["x"], &m["y"], &m["z"]);
    ensure!(running::sanitize(x).as_ref() == Some(y), "y is not the sanitised x in {m:?}");
    ensure!(*z == [x.clone(), y.clone()].concat(), "z ≠ x∘y in {m:?}");
    ensure!(running::c_then_d(z), "z has no c before a d in {m:?}");
    Ok(())
}

fn even_encodings() -> Result<(), String> {
    let (a, q) = fixtures::even_example();
    let init = Expr::and((0..5).map(|i| Expr::lit(Atom::State(q[i]), i == 0)));
    let letters: Vec<Atom> = input_bits(2, 1).into_iter().collect();
    let frame: Vec<Atom> = q.iter().map(|s| Atom::State(*s)).chain(q.iter().map(|s| Atom::Next(*s))).collect();
    let im = encode_minimal(&a);
    ensure!(equivalent(&im.init, &init), "minimal Init differs");
    let expected = fixtures::even_minimal_trans(&a, &q);
    ensure!(same_projection(&im.trans, &expected, &frame, &letters), "minimal Trans differs");
    let det = encode_deterministic(&a);
    ensure!(det.hvars.len() == 1 && det.states.len() == 5, "deterministic shape");
    ensure!(equivalent(&det.init, &init), "deterministic Init differs");
    let h = Expr::atom(det.hvars[0]);
    let same = equivalent(&det.trans, &fixtures::even_deterministic_trans(&q, &h))
        || equivalent(&det.trans, &fixtures::even_deterministic_trans(&q, &h.not()));
    ensure!(same, "deterministic Trans differs");
    Ok(())
}

fn worked_examples() -> Outcome {
    let parts: [(&str, fn() -> Result<(), String>); 6] = [
        ("letter encoding", letter_encoding),
        ("mod-35 membership", mod35_membership),
        ("escaping", escaping),
        ("synchronised relation", synchronised_relation),
        ("pipeline", pipeline_shapes),
        ("even-length encodings", even_encodings),
    ];
    for (name, f) in parts {
        f().map_err(|e| format!("{name}: {e}"))?;
    }
    Ok("6 example groups".into())
}

fn oracle_equivalence() -> Outcome {
    let seeds: Vec<u64> = (0..500).collect();
    let start = Instant::now();
    let rows = par::map(&seeds, |s| {
        let mut g = rng(0xe0_0000 + s);
        let n = g.gen_range(1..=6);
        let a = random_afa(&mut g, n, 2);
        let got = verdict(&check_reach(&encode_direct(&a), &ReachOptions::default()));
        (got, brute_nonempty(&a))
    });
    let took = start.elapsed();
    let mut bad = 0;
    for (i, (got, expect)) in rows.iter().enumerate() {
        if got.as_ref() != Ok(expect) {
            bad += 1;
            eprintln!("  instance {i}: engine {got:?}, oracle {expect}");
        }
    }
    let nonempty = rows.iter().filter(|r| r.1).count();
    ensure!(bad == 0, "{bad} disagreements");
    ensure!(took < Duration::from_secs(300), "took {took:?}");
    Ok(format!("500 automata, {nonempty} non-empty, 0 disagreements, {took:.2?}"))
}

fn encoding_agreement() -> Outcome {
    let seeds: Vec<u64> = (0..300).collect();
    let rows = par::map(&seeds, |s| {
        let mut g = rng(0xe1_0000 + s);
        let n = g.gen_range(1..=5);
        let a = random_afa(&mut g, n, 2);
        [Encoding::Direct, Encoding::Minimal, Encoding::Deterministic]
            .map(|e| verdict(&check_reach(&encode(&a, e), &ReachOptions::default())))
    });
    let bad: Vec<usize> = (0..rows.len())
        .filter(|i| rows[*i].iter().any(|r| r.is_err() || *r != rows[*i][0]))
        .collect();
    ensure!(bad.is_empty(), "{} disagreements, first at {}: {:?}", bad.len(), bad[0], rows[bad[0]]);
    let nonempty = rows.iter().filter(|r| r[0] == Ok(true)).count();
    Ok(format!("300 automata, {nonempty} non-empty, 0 disagreements"))
}

fn two_rail() -> Outcome {
    let seeds: Vec<u64> = (0..100).collect();
    let rows = par::map(&seeds, |s| {
        let mut g = rng(0xe2_0000 + s);
        let t = random_aft(&mut g, 2, 3, 2);
        let (out, _) = eliminate_params_with_rails(&t);
        if !out.params().is_empty() {
            return Some(format!("instance {s}: parameters remain"));
        }
        tuples(2, 3, 2).into_iter().find_map(|tup| {
            let expect = recognizes_some(&t, &tup, None).unwrap();
            let got = recognizes(&out, &tup, &Default::default(), None).unwrap();
            (got != expect).then(|| format!("instance {s}: {tup:?} eliminated {got}, ∃-projection {expect}"))
        })
    });
    let bad: Vec<&String> = rows.iter().flatten().collect();
    ensure!(bad.is_empty(), "{} disagreements, first: {}", bad.len(), bad[0]);
    Ok("100 transducers × 225 tuples, 0 disagreements".into())
}

fn splitting_terminates() -> Outcome {
    let seeds: Vec<u64> = (0..100).collect();
    let rows = par::map(&seeds, |s| -> Result<usize, String> {
        let f = random_sl(&mut rng(0xe3_0000 + s), 1 + *s as usize % 3);
        let p = substitute_equations(&preprocess(&f).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let (split, totals) = split_binary_traced(&p).map_err(|e| e.to_string())?;
        ensure!(totals.windows(2).all(|w| w[1] < w[0]), "instance {s}: weights {totals:?}");
        ensure!(totals.last() == Some(&0), "instance {s}: ends at weight {totals:?}");
        let ac = reorder(&split).map_err(|e| e.to_string())?;
        ensure!(check_acyclic(&ac).is_acyclic(), "instance {s}: not acyclic");
        Ok(totals.len() - 1)
    });
    let steps: usize = rows.into_iter().collect::<Result<Vec<_>, _>>()?.iter().sum();
    Ok(format!("100 conjunctions, {steps} splits, weight strictly decreasing"))
}

fn end_to_end() -> Outcome {
    const BITS: u32 = 1;
    let opts = SolveOptions { bits: BITS, ..Default::default() };
    let mut sat = vec![];
    let mut seed = 0xe4_0000u64;
    while sat.len() < 100 {
        let f = random_sl_script(&mut rng(seed), BITS, 3);
        if witness(&f, BITS, 3).is_some() {
            sat.push((seed, f));
        }
        seed += 1;
    }
    let rows = par::map(&sat, |(s, f)| match cli::solve(f, &opts) {
        Verdict::Sat(m) if satisfies(f, &m) => None,
        Verdict::Sat(m) => Some(format!("seed {s:#x}: model {m:?} does not verify")),
        v => Some(format!("seed {s:#x}: answered {v:?}")),
    });
    let bad: Vec<&String> = rows.iter().flatten().collect();
    ensure!(bad.is_empty(), "{} sat failures, first: {}", bad.len(), bad[0]);

    let mut unsat = vec![];
    let mut seed = 0xe5_0000u64;
    while unsat.len() < 50 {
        let (f, bound) = random_bounded_script(&mut rng(seed), BITS);
        let none = bound <= 8
            && words(bound, 1 << BITS).into_iter().all(|w| !satisfies(&f, &[("x".to_string(), w)].into()));
        if none {
            unsat.push((seed, f, bound));
        }
        seed += 1;
    }
    let rows = par::map(&unsat, |(s, f, _)| match cli::solve(f, &opts) {
        Verdict::Unsat => None,
        v => Some(format!("seed {s:#x}: answered {v:?}")),
    });
    let bad: Vec<&String> = rows.iter().flatten().collect();
    ensure!(bad.is_empty(), "{} unsat failures, first: {}", bad.len(), bad[0]);
    let longest = unsat.iter().map(|u| u.2).max().unwrap_or(0);
    Ok(format!("100 sat with verified models, 50 unsat (length bounds up to {longest})"))
}

fn aiger_fidelity() -> Outcome {
    const ENCODINGS: [Encoding; 3] = [Encoding::Direct, Encoding::Minimal, Encoding::Deterministic];
    let seeds: Vec<u64> = (0..50).collect();
    let rows = par::map(&seeds, |s| -> Result<(), String> {
        let mut g = rng(0xe6_0000 + s);
        let n = g.gen_range(1..=3);
        let ts = encode(&random_afa(&mut g, n, 1), ENCODINGS[*s as usize % 3]);
        let text = strsolve::reach::export_aiger(&ts).0.to_text();
        let again = Aiger::parse(&text).map_err(|e| format!("system {s}: {e}"))?;
        ensure!(again.to_text() == text, "system {s}: re-parse changes the circuit");
        let sim = aiger_layers(&ts, 5);
        let engine = bounded_layers(&ts, 4);
        ensure!(sim == engine, "system {s}: circuit {sim:?}, engine {engine:?}");
        Ok(())
    });
    rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok("50 systems, 4 steps, frontiers identical".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("worked examples", worked_examples),
        ("oracle equivalence", oracle_equivalence),
        ("encoding agreement", encoding_agreement),
        ("two-rail correctness", two_rail),
        ("splitting termination", splitting_terminates),
        ("end-to-end soundness", end_to_end),
        ("AIGER fidelity", aiger_fidelity),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let took = start.elapsed();
        match r {
            Ok(detail) => println!("PASS  {name}: {detail} [{took:.1?}]"),
            Err(e) => {
                failed += 1;
                println!("FAIL  {name}: {e} [{took:.1?}]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
