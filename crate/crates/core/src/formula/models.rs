// SPDX-License-Identifier: Apache-2.0

//! Tseytin encoding of [`Expr`] into the CDCL solver and model enumeration
//! with blocking clauses, optionally restricted to subset-minimal models.

use std::collections::HashMap;

use super::expr::{Assignment, Atom, Expr, Kind};
use super::sat::{Lit, Solver, Var};

/// An incremental SAT session over atoms.
pub struct SatContext {
    solver: Solver,
    atom_vars: HashMap<Atom, Var>,
    node_lits: HashMap<u64, Lit>,
    // keeps encoded nodes alive so their ids stay unique
    pinned: Vec<Expr>,
    true_lit: Option<Lit>,
}

impl Default for SatContext {
    fn default() -> Self {
        Self::new()
    }
}

impl SatContext {
    pub fn new() -> Self {
        SatContext {
            solver: Solver::new(),
            atom_vars: HashMap::new(),
            node_lits: HashMap::new(),
            pinned: Vec::new(),
            true_lit: None,
        }
    }

    pub fn solver_conflicts(&self) -> u64 {
        self.solver.conflicts()
    }

    fn true_lit(&mut self) -> Lit {
        if let Some(l) = self.true_lit {
            return l;
        }
        let l = Lit::new(self.solver.new_var(), true);
        self.solver.add_clause(&[l]);
        self.true_lit = Some(l);
        l
    }

    pub fn atom_lit(&mut self, a: Atom) -> Lit {
        if let Some(v) = self.atom_vars.get(&a) {
            return Lit::new(*v, true);
        }
        let v = self.solver.new_var();
        self.atom_vars.insert(a, v);
        Lit::new(v, true)
    }

    pub fn fresh_lit(&mut self) -> Lit {
        Lit::new(self.solver.new_var(), true)
    }

    /// Literal equivalent to `e` (full Tseytin definitions).
    pub fn encode(&mut self, e: &Expr) -> Lit {
        if let Some(l) = self.node_lits.get(&e.id()) {
            return *l;
        }
        // iterative post-order to survive deep formulas
        let mut stack: Vec<(Expr, bool)> = vec![(e.clone(), false)];
        while let Some((node, expanded)) = stack.pop() {
            if self.node_lits.contains_key(&node.id()) {
                continue;
            }
            if !expanded {
                stack.push((node.clone(), true));
                match node.kind() {
                    Kind::Not(c) => stack.push((c.clone(), false)),
                    Kind::And(cs) | Kind::Or(cs) => {
                        for c in cs {
                            stack.push((c.clone(), false));
                        }
                    }
                    _ => {}
                }
                continue;
            }
            let lit = match node.kind() {
                Kind::Const(b) => {
                    let t = self.true_lit();
                    if *b {
                        t
                    } else {
                        !t
                    }
                }
                Kind::Atom(a) => self.atom_lit(*a),
                Kind::Not(c) => !self.node_lits[&c.id()],
                Kind::And(cs) | Kind::Or(cs) => {
                    let conj = matches!(node.kind(), Kind::And(_));
                    let kids: Vec<Lit> = cs.iter().map(|c| self.node_lits[&c.id()]).collect();
                    let g = self.fresh_lit();
                    if conj {
                        let mut big = vec![g];
                        for &k in &kids {
                            self.solver.add_clause(&[!g, k]);
                            big.push(!k);
                        }
                        self.solver.add_clause(&big);
                    } else {
                        let mut big = vec![!g];
                        for &k in &kids {
                            self.solver.add_clause(&[g, !k]);
                            big.push(k);
                        }
                        self.solver.add_clause(&big);
                    }
                    g
                }
            };
            self.node_lits.insert(node.id(), lit);
            self.pinned.push(node);
        }
        self.node_lits[&e.id()]
    }

    pub fn assert(&mut self, e: &Expr) {
        if let Some(b) = e.as_const() {
            if !b {
                self.solver.add_clause(&[]);
            }
            return;
        }
        for c in e.conjuncts() {
            let l = self.encode(&c);
            self.solver.add_clause(&[l]);
        }
    }

    pub fn add_clause(&mut self, lits: &[Lit]) {
        self.solver.add_clause(lits);
    }

    fn assumption_lits(&mut self, assumptions: &[(Atom, bool)]) -> Vec<Lit> {
        assumptions
            .iter()
            .map(|&(a, v)| {
                let l = self.atom_lit(a);
                if v {
                    l
                } else {
                    !l
                }
            })
            .collect()
    }

    pub fn solve(&mut self, assumptions: &[(Atom, bool)]) -> bool {
        let lits = self.assumption_lits(assumptions);
        self.solver.solve(&lits)
    }

    pub fn solve_lits(&mut self, assumptions: &[Lit]) -> bool {
        self.solver.solve(assumptions)
    }

    /// Value of an atom in the last model; atoms never encoded read false.
    pub fn model_value(&self, a: Atom) -> bool {
        self.atom_vars
            .get(&a)
            .map(|v| self.solver.model_value(*v))
            .unwrap_or(false)
    }

    pub fn model_over(&self, universe: &[Atom]) -> Assignment {
        universe.iter().map(|a| (*a, self.model_value(*a))).collect()
    }

    /// Starts a model enumeration under `assumptions`. Blocking clauses
    /// are guarded by a fresh activation literal and retired when the
    /// stream is dropped, so the context can be reused afterwards.
    pub fn models<'a>(
        &'a mut self,
        assumptions: &[(Atom, bool)],
        universe: &[Atom],
        minimal_over: Option<&[Atom]>,
    ) -> ModelStream<'a> {
        for a in universe {
            self.atom_lit(*a);
        }
        if let Some(m) = minimal_over {
            for a in m {
                self.atom_lit(*a);
            }
        }
        let mut base = self.assumption_lits(assumptions);
        let act = self.fresh_lit();
        base.push(act);
        ModelStream {
            ctx: self,
            base,
            act,
            universe: universe.to_vec(),
            minimal_over: minimal_over.map(|m| m.to_vec()),
            done: false,
        }
    }
}

/// Lazily produced models; see [`SatContext::models`].
pub struct ModelStream<'a> {
    ctx: &'a mut SatContext,
    base: Vec<Lit>,
    act: Lit,
    universe: Vec<Atom>,
    minimal_over: Option<Vec<Atom>>,
    done: bool,
}

// A model is subset-minimal on `minimal_over` iff no single true atom can
// be switched off while the false ones stay false. An atom that cannot be
// switched off stays necessary when the set shrinks further.
fn shrink(ctx: &mut SatContext, base: &[Lit], minimal_over: &[Atom]) -> Vec<Atom> {
    let mut current: Vec<Atom> = minimal_over
        .iter()
        .copied()
        .filter(|a| ctx.model_value(*a))
        .collect();
    let mut guards = Vec::new();
    loop {
        // some atom of `current` must go, every other atom stays false
        let g = ctx.fresh_lit();
        guards.push(g);
        let mut clause = vec![!g];
        clause.extend(current.iter().map(|a| !ctx.atom_lit(*a)));
        ctx.add_clause(&clause);
        let mut assumptions = base.to_vec();
        assumptions.push(g);
        for b in minimal_over {
            if !current.contains(b) {
                assumptions.push(!ctx.atom_lit(*b));
            }
        }
        if !ctx.solver.solve(&assumptions) {
            break;
        }
        current.retain(|b| ctx.model_value(*b));
    }
    for g in guards {
        ctx.add_clause(&[!g]);
    }
    // leave the solver holding a model of the minimal set
    let mut assumptions = base.to_vec();
    for a in minimal_over {
        let l = ctx.atom_lit(*a);
        assumptions.push(if current.contains(a) { l } else { !l });
    }
    let ok = ctx.solver.solve(&assumptions);
    debug_assert!(ok);
    current
}

fn next_model(
    ctx: &mut SatContext,
    base: &[Lit],
    universe: &[Atom],
    minimal_over: Option<&[Atom]>,
    guard: Option<Lit>,
) -> Option<Assignment> {
    if !ctx.solver.solve(base) {
        return None;
    }
    let mut clause: Vec<Lit> = match minimal_over {
        Some(m) => {
            let min = shrink(ctx, base, m);
            min.iter().map(|a| !ctx.atom_lit(*a)).collect()
        }
        None => universe
            .iter()
            .map(|a| {
                let l = ctx.atom_lit(*a);
                if ctx.model_value(*a) {
                    !l
                } else {
                    l
                }
            })
            .collect(),
    };
    let model = ctx.model_over(universe);
    if let Some(g) = guard {
        clause.push(!g);
    }
    ctx.solver.add_clause(&clause);
    Some(model)
}

impl Iterator for ModelStream<'_> {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        if self.done {
            return None;
        }
        let item = next_model(
            self.ctx,
            &self.base,
            &self.universe,
            self.minimal_over.as_deref(),
            Some(self.act),
        );
        self.done = item.is_none();
        item
    }
}

impl Drop for ModelStream<'_> {
    fn drop(&mut self) {
        self.ctx.solver.add_clause(&[!self.act]);
    }
}

/// Owned enumeration of the models of a single formula.
pub struct Models {
    ctx: SatContext,
    universe: Vec<Atom>,
    minimal_over: Option<Vec<Atom>>,
    done: bool,
}

impl Iterator for Models {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        if self.done {
            return None;
        }
        let item = next_model(
            &mut self.ctx,
            &[],
            &self.universe,
            self.minimal_over.as_deref(),
            None,
        );
        self.done = item.is_none();
        item
    }
}

/// Streams the satisfying assignments of `expr` over `universe`.
///
/// With `minimal_over`, only assignments whose restriction to that subset
/// is subset-minimal among all models are produced, one per minimal
/// restriction. Atoms of `expr` outside `universe` are projected away.
pub fn enum_models(expr: &Expr, universe: &[Atom], minimal_over: Option<&[Atom]>) -> Models {
    let mut ctx = SatContext::new();
    ctx.assert(expr);
    for a in universe {
        ctx.atom_lit(*a);
    }
    if let Some(m) = minimal_over {
        for a in m {
            ctx.atom_lit(*a);
        }
    }
    Models {
        ctx,
        universe: universe.to_vec(),
        minimal_over: minimal_over.map(|m| m.to_vec()),
        done: false,
    }
}

/// Satisfiability check with a model over the formula's atoms.
pub fn solve(expr: &Expr) -> Option<Assignment> {
    let atoms: Vec<Atom> = expr.atoms().into_iter().collect();
    enum_models(expr, &atoms, None).next()
}

pub fn is_sat(expr: &Expr) -> bool {
    solve(expr).is_some()
}

/// Logical equivalence decided by SAT.
pub fn equivalent(a: &Expr, b: &Expr) -> bool {
    !is_sat(&Expr::iff(a, b).not())
}
