// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use crate::formula::{enum_models, Atom, Expr, Kind};

use super::{combine, Afa, CombineKind};

// Splits an NNF formula positive on states into pairs (φ(V), ψ(Q)) whose
// disjunction is equivalent to it. Letter-only subformulas stay opaque.
fn separate(e: &Expr) -> Vec<(Expr, Expr)> {
    let has_state = e.atoms().iter().any(Atom::is_state);
    if !has_state {
        return if e.is_false() {
            vec![]
        } else {
            vec![(e.clone(), Expr::tt())]
        };
    }
    match e.kind() {
        Kind::Atom(Atom::State(_)) => vec![(Expr::tt(), e.clone())],
        Kind::Or(cs) => cs.iter().flat_map(separate).collect(),
        Kind::And(cs) => {
            let (pure, mixed): (Vec<&Expr>, Vec<&Expr>) = cs
                .iter()
                .partition(|c| !c.atoms().iter().any(Atom::is_state));
            let mut acc = vec![(Expr::and(pure.into_iter().cloned()), Expr::tt())];
            for c in mixed {
                let parts = separate(c);
                let mut next = Vec::with_capacity(acc.len() * parts.len());
                for (p0, s0) in &acc {
                    for (p1, s1) in &parts {
                        let p = Expr::and2(p0, p1);
                        if !p.is_false() {
                            next.push((p, Expr::and2(s0, s1)));
                        }
                    }
                }
                acc = next;
            }
            acc
        }
        _ => unreachable!("transition formulas are positive on states"),
    }
}

// Rewrites Δ(q) into pairwise-disjoint input regions, each with the dual of
// the disjunction of targets whose input formula covers the region.
fn normalized_dual(delta: &Expr) -> Expr {
    let mut groups: BTreeMap<u64, (Expr, Vec<Expr>)> = BTreeMap::new();
    let mut order = Vec::new();
    for (phi, psi) in separate(&delta.nnf()) {
        let entry = groups.entry(phi.id()).or_insert_with(|| {
            order.push(phi.id());
            (phi.clone(), Vec::new())
        });
        entry.1.push(psi);
    }
    let parts: Vec<(Expr, Expr)> = order
        .iter()
        .map(|id| {
            let (phi, psis) = &groups[id];
            (phi.clone(), Expr::or(psis.iter().cloned()))
        })
        .collect();
    let selectors: Vec<Atom> = (0..parts.len() as u32).map(Atom::Aux).collect();
    let link = Expr::and(
        parts
            .iter()
            .zip(&selectors)
            .map(|((phi, _), s)| Expr::iff(&Expr::atom(*s), phi)),
    );
    let mut out = Vec::new();
    for m in enum_models(&link, &selectors, None) {
        let mut region = Vec::new();
        let mut targets = Vec::new();
        for ((phi, psi), s) in parts.iter().zip(&selectors) {
            if m.get(*s) == Some(true) {
                region.push(phi.clone());
                targets.push(psi.clone());
            } else {
                region.push(phi.not());
            }
        }
        let target = Expr::or(targets).nnf().polarity_dual();
        out.push(Expr::and2(&Expr::and(region), &target));
    }
    Expr::or(out)
}

/// Language complement.
///
/// The final formula is split into its DNF cubes (complement of a union is
/// the intersection of complements), transitions are separated into
/// input/target pairs, normalised to disjoint input regions and dualised.
pub fn complement(a: &Afa) -> Afa {
    assert!(
        a.params().is_empty(),
        "complement is defined for parameter-free automata"
    );
    let vars = a.vars().clone();
    let cubes = a.final_formula().dnf();
    if cubes.is_empty() {
        return Afa::universal(vars);
    }
    if cubes.len() > 1 {
        log::warn!(
            "complementing an automaton whose final formula has {} cubes",
            cubes.len()
        );
    }
    let delta: BTreeMap<u32, Expr> = a
        .delta()
        .iter()
        .map(|(q, d)| (*q, normalized_dual(d)))
        .collect();
    let init = a.init().nnf().polarity_dual();
    let states: BTreeSet<u32> = a.states().collect();
    let mut result: Option<Afa> = None;
    for cube in cubes {
        let rejecting: BTreeSet<u32> = cube
            .iter()
            .filter_map(|(atom, v)| match atom {
                Atom::State(q) if !*v => Some(*q),
                _ => None,
            })
            .collect();
        let fin = Expr::and(
            states
                .difference(&rejecting)
                .map(|q| Expr::state(*q).not()),
        );
        let part = Afa::from_parts_unchecked(vars.clone(), delta.clone(), init.clone(), fin);
        result = Some(match result {
            None => part,
            Some(acc) => combine(&acc, &part, CombineKind::Intersection),
        });
    }
    result.expect("at least one cube")
}
