// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU32, Ordering};

use crate::acsolve::AcFormula;
use crate::automata::{combine, complement, CombineKind, Regex};
use crate::formula::{Atom, Expr, Kind};
use crate::transduce::{regular_to_rational, Var};

use super::{singleton, Conjunct, Names, Recon, SlConjunction, SlError, Term};

static NEXT_PARAM: AtomicU32 = AtomicU32::new(1 << 24);

fn fresh_param() -> u32 {
    NEXT_PARAM.fetch_add(1, Ordering::Relaxed)
}

/// Upper bound on the states of a minimal model of an NNF formula that is
/// positive on states.
fn state_bound(e: &Expr) -> usize {
    match e.kind() {
        Kind::Const(_) => 0,
        Kind::Atom(a) => a.is_state() as usize,
        Kind::Not(x) if matches!(x.kind(), Kind::Atom(_)) => 0,
        Kind::Not(x) => x.atoms().iter().filter(|a| a.is_state()).count(),
        Kind::And(xs) => xs.iter().map(state_bound).fold(0, usize::saturating_add),
        Kind::Or(xs) => xs.iter().map(state_bound).max().unwrap_or(0),
    }
}

/// Whether every minimal run of the transducer keeps at most one state.
fn runs_in_single_states(t: &crate::transduce::Aft) -> bool {
    let b = t.base();
    state_bound(b.init()) <= 1 && b.delta().values().all(|d| state_bound(d) <= 1)
}

/// Checks the straight-line shape: every variable is defined at most once
/// and only used by definitions that come after its own.
pub fn check_straight_line(f: &SlConjunction) -> Result<(), String> {
    let mut defined = BTreeSet::new();
    let mut used = BTreeSet::new();
    for c in &f.conjuncts {
        let Some(x) = c.defined() else { continue };
        if defined.contains(x) {
            return Err(format!("{x} is defined twice"));
        }
        if used.contains(x) {
            return Err(format!("{x} is used before its definition"));
        }
        let uses = c.uses();
        if uses.contains(x) {
            return Err(format!("{x} is defined in terms of itself"));
        }
        defined.insert(x.clone());
        used.extend(uses);
    }
    Ok(())
}

fn names_of(f: &SlConjunction) -> Names {
    Names::new(f.vars())
}

fn occurrences(f: &SlConjunction) -> BTreeMap<Var, usize> {
    let mut n = BTreeMap::new();
    for c in &f.conjuncts {
        for v in c.defined().cloned().into_iter().chain(c.uses()) {
            *n.entry(v).or_insert(0) += 1;
        }
    }
    n
}

/// Removes negation, turns equations over otherwise unused variables into
/// regular constraints, lifts constants to variables, and replaces the
/// regular constraints of each variable `v` by one definition
/// `v′ = ℛ(v)` with `ℛ` reading their intersection on track 2.
pub fn preprocess(f: &SlConjunction) -> Result<SlConjunction, SlError> {
    let bits = f.bits;
    let occ = occurrences(f);
    let mut names = names_of(f);
    let mut recon = f.recon.clone();
    let mut conjuncts = Vec::new();
    let mut consts = Vec::new();
    for c in &f.conjuncts {
        match c {
            Conjunct::Regular {
                afa,
                var,
                negated: true,
            } => conjuncts.push(Conjunct::Regular {
                afa: complement(afa),
                var: var.clone(),
                negated: false,
            }),
            Conjunct::Equation { lhs, rhs }
                if rhs
                    .iter()
                    .filter_map(Term::as_var)
                    .all(|y| y != lhs && occ.get(y) == Some(&1)) =>
            {
                let re = Regex::Concat(
                    rhs.iter()
                        .map(|t| match t {
                            Term::Const(w) => Regex::literal(w),
                            Term::Var(_) => Regex::Star(Box::new(Regex::any(bits))),
                        })
                        .collect(),
                );
                conjuncts.push(Conjunct::Regular {
                    afa: re.to_afa(bits),
                    var: lhs.clone(),
                    negated: false,
                });
                recon.push(Recon::Pattern {
                    source: lhs.clone(),
                    parts: rhs.clone(),
                });
            }
            Conjunct::Equation { lhs, rhs } => {
                let rhs = rhs
                    .iter()
                    .map(|t| match t {
                        Term::Var(_) => t.clone(),
                        Term::Const(w) => {
                            let c = names.fresh("c#0".into());
                            consts.push(Conjunct::Regular {
                                afa: singleton(w, bits),
                                var: c.clone(),
                                negated: false,
                            });
                            Term::Var(c)
                        }
                    })
                    .collect();
                conjuncts.push(Conjunct::Equation {
                    lhs: lhs.clone(),
                    rhs,
                });
            }
            _ => conjuncts.push(c.clone()),
        }
    }
    conjuncts.extend(consts);
    // intersect per variable, in order of first appearance
    let mut langs: Vec<(Var, crate::automata::Afa)> = Vec::new();
    let mut rest = Vec::new();
    for c in conjuncts {
        match c {
            Conjunct::Regular { afa, var, .. } => match langs.iter_mut().find(|(v, _)| *v == var) {
                Some((_, a)) => *a = combine(a, &afa, CombineKind::Intersection),
                None => langs.push((var, afa)),
            },
            other => rest.push(other),
        }
    }
    for (v, a) in langs {
        let lhs = names.fresh(format!("{v}'"));
        rest.push(Conjunct::Rational {
            lhs,
            aft: regular_to_rational(&a, bits)?,
            args: vec![v],
        });
    }
    let out = SlConjunction {
        conjuncts: rest,
        recon,
        bits,
    };
    debug_assert_eq!(check_straight_line(&out), Ok(()));
    Ok(out)
}

fn replace_in(args: &[Var], x: &Var, by: &[Var]) -> Vec<Var> {
    args.iter()
        .flat_map(|a| {
            if a == x {
                by.to_vec()
            } else {
                vec![a.clone()]
            }
        })
        .collect()
}

/// Eliminates the equations left to right by substituting their right-hand
/// sides into the later conjuncts.
pub fn substitute_equations(f: &SlConjunction) -> Result<SlConjunction, SlError> {
    let mut conjuncts = f.conjuncts.clone();
    let mut recon = f.recon.clone();
    let mut i = 0;
    while i < conjuncts.len() {
        let Conjunct::Equation { lhs, rhs } = &conjuncts[i] else {
            if matches!(conjuncts[i], Conjunct::Regular { .. }) {
                return Err(SlError::Shape("regular constraint left after preprocessing".into()));
            }
            i += 1;
            continue;
        };
        let parts: Vec<Var> = rhs
            .iter()
            .map(|t| t.as_var().cloned())
            .collect::<Option<_>>()
            .ok_or_else(|| SlError::Shape("constant left after preprocessing".into()))?;
        let x = lhs.clone();
        for c in conjuncts[i + 1..].iter_mut() {
            match c {
                Conjunct::Rational { args, .. } => *args = replace_in(args, &x, &parts),
                Conjunct::Equation { rhs, .. } => {
                    *rhs = rhs
                        .iter()
                        .flat_map(|t| match t {
                            Term::Var(v) if *v == x => parts.iter().cloned().map(Term::Var).collect(),
                            _ => vec![t.clone()],
                        })
                        .collect()
                }
                Conjunct::Regular { .. } => {}
            }
        }
        conjuncts.remove(i);
        recon.push(Recon::Concat { var: x, parts });
        let out = SlConjunction {
            conjuncts: conjuncts.clone(),
            recon: recon.clone(),
            bits: f.bits,
        };
        debug_assert_eq!(check_straight_line(&out), Ok(()));
    }
    Ok(SlConjunction {
        conjuncts,
        recon,
        bits: f.bits,
    })
}

/// Sum of the weights of the defined variables, where a definition with a
/// right-hand side of `m` parts weighs `m − 1` plus the weights of the
/// parts, and undefined variables weigh 0.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WeightLedger {
    pub weights: BTreeMap<Var, u64>,
}

impl WeightLedger {
    pub fn of(f: &SlConjunction) -> WeightLedger {
        let mut weights: BTreeMap<Var, u64> = BTreeMap::new();
        for c in &f.conjuncts {
            let (x, m, uses) = match c {
                Conjunct::Equation { lhs, rhs } => (lhs, rhs.len(), c.uses()),
                Conjunct::Rational { lhs, args, .. } => (lhs, args.len(), args.clone()),
                Conjunct::Regular { .. } => continue,
            };
            let below: u64 = uses.iter().map(|v| weights.get(v).copied().unwrap_or(0)).sum();
            weights.insert(x.clone(), m.saturating_sub(1) as u64 + below);
        }
        WeightLedger { weights }
    }

    pub fn total(&self) -> u64 {
        self.weights.values().sum()
    }
}

/// [`split_binary`] together with the ledger total before each split and
/// after the last one.
pub fn split_binary_traced(f: &SlConjunction) -> Result<(SlConjunction, Vec<u64>), SlError> {
    if f.conjuncts.iter().any(|c| !matches!(c, Conjunct::Rational { .. })) {
        return Err(SlError::Shape("splitting needs an equation-free conjunction of definitions".into()));
    }
    let mut names = names_of(f);
    let mut conjuncts = f.conjuncts.clone();
    let mut recon = f.recon.clone();
    let mut totals = vec![WeightLedger::of(f).total()];
    // conjuncts whose crossing configuration can be taken to be a single
    // state; the right half of such a split keeps the property
    let mut single: Vec<bool> = conjuncts
        .iter()
        .map(|c| matches!(c, Conjunct::Rational { aft, .. } if runs_in_single_states(aft)))
        .collect();
    while let Some(i) = conjuncts
        .iter()
        .position(|c| matches!(c, Conjunct::Rational { args, .. } if args.len() >= 2))
    {
        let Conjunct::Rational { lhs, aft, args } = conjuncts[i].clone() else {
            unreachable!()
        };
        let base = aft.base();
        let ts: Vec<(u32, u32)> = base.states().map(|q| (q, fresh_param())).collect();
        let p = |s: u32| Expr::atom(Atom::Param(s));
        let f1 = Expr::and(ts.iter().map(|(q, t)| Expr::implies(&Expr::state(*q), &p(*t))));
        let i2 = Expr::and(ts.iter().map(|(q, t)| Expr::implies(&p(*t), &Expr::state(*q))));
        let mut i1 = base.init().clone();
        if single[i] {
            let at_most_one = (0..ts.len())
                .flat_map(|a| (a + 1..ts.len()).map(move |b| (a, b)))
                .map(|(a, b)| Expr::or2(&p(ts[a].1).not(), &p(ts[b].1).not()));
            i1 = Expr::and(std::iter::once(i1).chain(at_most_one));
        }
        let r1 = aft.with_init_final(i1, f1)?;
        let r2 = aft.with_init_final(i2, base.final_formula().clone())?;
        let left = names.fresh(format!("{lhs}#L"));
        let right = names.fresh(format!("{lhs}#R"));
        conjuncts[i] = Conjunct::Rational {
            lhs: right.clone(),
            aft: r2,
            args: args[1..].to_vec(),
        };
        conjuncts.insert(
            i,
            Conjunct::Rational {
                lhs: left.clone(),
                aft: r1,
                args: vec![args[0].clone()],
            },
        );
        single.insert(i, false);
        let by = [left.clone(), right.clone()];
        for c in conjuncts[i + 2..].iter_mut() {
            if let Conjunct::Rational { args, .. } = c {
                *args = replace_in(args, &lhs, &by);
            }
        }
        recon.push(Recon::Concat {
            var: lhs,
            parts: by.to_vec(),
        });
        let out = SlConjunction {
            conjuncts: conjuncts.clone(),
            recon: recon.clone(),
            bits: f.bits,
        };
        debug_assert_eq!(check_straight_line(&out), Ok(()));
        let total = WeightLedger::of(&out).total();
        debug_assert!(
            total < *totals.last().expect("initial total"),
            "weight did not decrease"
        );
        totals.push(total);
    }
    Ok((
        SlConjunction {
            conjuncts,
            recon,
            bits: f.bits,
        },
        totals,
    ))
}

/// Splits mixed constraints, leftmost first, until every definition has a
/// single argument. Halves of a split communicate the crossing
/// configuration through one fresh parameter per state. When every
/// minimal run of the split transducer keeps at most one state, at most
/// one of these parameters may be set.
pub fn split_binary(f: &SlConjunction) -> Result<SlConjunction, SlError> {
    Ok(split_binary_traced(f)?.0)
}

/// Orders the definitions along the dependency graph (`x → y` for
/// `x = ℛ(y)`), users first, and associates the conjunction to the right,
/// so that each conjunct shares at most its argument with the rest.
pub fn reorder(f: &SlConjunction) -> Result<AcFormula, SlError> {
    let mut defs: Vec<(Var, Var)> = Vec::new();
    for c in &f.conjuncts {
        match c {
            Conjunct::Rational { lhs, args, .. } if args.len() == 1 => {
                defs.push((lhs.clone(), args[0].clone()))
            }
            _ => return Err(SlError::Shape("reordering needs single-argument definitions".into())),
        }
    }
    let mut users: BTreeMap<&Var, usize> = BTreeMap::new();
    for (_, y) in &defs {
        *users.entry(y).or_insert(0) += 1;
    }
    let mut pending: BTreeSet<usize> = (0..defs.len()).collect();
    let mut order = Vec::new();
    while !pending.is_empty() {
        let ready = pending
            .iter()
            .copied()
            .find(|i| users.get(&defs[*i].0).copied().unwrap_or(0) == 0);
        let Some(i) = ready else {
            let stuck = pending.iter().next().expect("nonempty");
            return Err(SlError::CycleDetected(defs[*stuck].0.clone()));
        };
        pending.remove(&i);
        *users.get_mut(&defs[i].1).expect("counted") -= 1;
        order.push(i);
    }
    let leaf = |i: usize| match &f.conjuncts[i] {
        Conjunct::Rational { lhs, aft, args } => AcFormula::Rational {
            aft: aft.clone(),
            vars: vec![lhs.clone(), args[0].clone()],
        },
        _ => unreachable!(),
    };
    let mut it = order.into_iter().rev();
    let Some(last) = it.next() else {
        return Ok(AcFormula::And(Vec::new()));
    };
    let mut acc = leaf(last);
    for i in it {
        acc = AcFormula::and2(leaf(i), acc);
    }
    Ok(acc)
}

/// Preprocessing, substitution, splitting and reordering. Returns the
/// acyclic formula and how to rebuild the eliminated variables.
pub fn run_pipeline(f: &SlConjunction) -> Result<(AcFormula, Vec<Recon>), SlError> {
    let f = preprocess(f)?;
    let f = substitute_equations(&f)?;
    let f = split_binary(&f)?;
    Ok((reorder(&f)?, f.recon))
}
