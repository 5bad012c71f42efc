// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use crate::formula::{Assignment, Atom, Expr, SatContext};

use super::Afa;

/// Incremental successor computation for one automaton.
///
/// The solver holds `⋀_q q → Δ(q)[q̄/q̄′]` once; a configuration and the
/// letter constraints are passed as assumptions on every query.
pub struct Stepper {
    ctx: SatContext,
    states: Vec<u32>,
    next: Vec<Atom>,
}

impl Stepper {
    pub fn new(a: &Afa) -> Stepper {
        let mut ctx = SatContext::new();
        for (q, d) in a.delta() {
            let primed = d.rename(|x| match x {
                Atom::State(p) => Atom::Next(p),
                o => o,
            });
            ctx.assert(&Expr::implies(&Expr::state(*q), &primed));
        }
        let states: Vec<u32> = a.states().collect();
        let next = states.iter().map(|q| Atom::Next(*q)).collect();
        Stepper { ctx, states, next }
    }

    /// Adds `name ↔ e`, so that `name` can later be assumed.
    pub fn define(&mut self, name: Atom, e: &Expr) {
        self.ctx.assert(&Expr::iff(&Expr::atom(name), e));
    }

    pub fn successors(
        &mut self,
        config: &BTreeSet<u32>,
        assumptions: &[(Atom, bool)],
        minimal: bool,
    ) -> Vec<BTreeSet<u32>> {
        self.successors_with(config, assumptions, minimal, &[])
            .into_iter()
            .map(|(c, _)| c)
            .collect()
    }

    /// Successor configurations together with the values of `observe` in
    /// the model that produced each of them.
    pub fn successors_with(
        &mut self,
        config: &BTreeSet<u32>,
        assumptions: &[(Atom, bool)],
        minimal: bool,
        observe: &[Atom],
    ) -> Vec<(BTreeSet<u32>, Assignment)> {
        let mut full: Vec<(Atom, bool)> = self
            .states
            .iter()
            .map(|q| (Atom::State(*q), config.contains(q)))
            .collect();
        full.extend_from_slice(assumptions);
        let mut universe = self.next.clone();
        universe.extend_from_slice(observe);
        let next = self.next.clone();
        let stream = self
            .ctx
            .models(&full, &universe, if minimal { Some(&next) } else { None });
        stream
            .map(|m| {
                let succ = m
                    .true_atoms()
                    .filter_map(|a| match a {
                        Atom::Next(q) => Some(q),
                        _ => None,
                    })
                    .collect();
                (succ, m.project(|a| !matches!(a, Atom::Next(_))))
            })
            .collect()
    }
}
