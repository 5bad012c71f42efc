// SPDX-License-Identifier: Apache-2.0

//! Acyclic formulas: Boolean combinations of rational and regular
//! constraints where every conjunction shares at most one variable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::automata::{complement, fresh_state, Afa};
use crate::formula::{Atom, Expr, Kind};
use crate::transduce::{aft_combine, Aft, Junction, TransduceError, Var};

#[derive(Clone, Debug)]
pub enum AcFormula {
    /// `R(x_1, …, x_k)`, track i reading `x_i`.
    Rational { aft: Aft, vars: Vec<Var> },
    /// `x ∈ L(a)` (or its negation); `a` reads track 1.
    Regular { afa: Afa, var: Var, negated: bool },
    And(Vec<AcFormula>),
    Or(Vec<AcFormula>),
    Not(Box<AcFormula>),
}

impl AcFormula {
    pub fn rational(aft: Aft, vars: &[&str]) -> AcFormula {
        AcFormula::Rational {
            aft,
            vars: vars.iter().map(|v| v.to_string()).collect(),
        }
    }

    pub fn regular(afa: Afa, var: &str) -> AcFormula {
        AcFormula::Regular {
            afa,
            var: var.to_string(),
            negated: false,
        }
    }

    pub fn and2(a: AcFormula, b: AcFormula) -> AcFormula {
        AcFormula::And(vec![a, b])
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        match self {
            AcFormula::Rational { vars, .. } => vars.iter().cloned().collect(),
            AcFormula::Regular { var, .. } => [var.clone()].into(),
            AcFormula::And(cs) | AcFormula::Or(cs) => {
                cs.iter().flat_map(AcFormula::free_vars).collect()
            }
            AcFormula::Not(c) => c.free_vars(),
        }
    }

    /// Negation pushed down to the leaves; negated regular leaves keep a
    /// flag, negated rational leaves stay wrapped in `Not`.
    pub fn nnf(&self) -> AcFormula {
        self.nnf_pol(true)
    }

    fn nnf_pol(&self, positive: bool) -> AcFormula {
        match self {
            AcFormula::Rational { .. } if positive => self.clone(),
            AcFormula::Rational { .. } => AcFormula::Not(Box::new(self.clone())),
            AcFormula::Regular { afa, var, negated } => AcFormula::Regular {
                afa: afa.clone(),
                var: var.clone(),
                negated: *negated != !positive,
            },
            AcFormula::And(cs) | AcFormula::Or(cs) => {
                let kids = cs.iter().map(|c| c.nnf_pol(positive)).collect();
                match (self, positive) {
                    (AcFormula::And(_), true) | (AcFormula::Or(_), false) => AcFormula::And(kids),
                    _ => AcFormula::Or(kids),
                }
            }
            AcFormula::Not(c) => c.nnf_pol(!positive),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    RationalUnderNegation,
    RepeatedVar(Var),
    SharedVars(Vec<Var>),
}

/// Result of [`check_acyclic`]. `path` lists child indices from the root
/// to the offending node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnosis {
    Acyclic,
    Violation { path: Vec<usize>, kind: Violation },
}

impl Diagnosis {
    pub fn is_acyclic(&self) -> bool {
        matches!(self, Diagnosis::Acyclic)
    }
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnosis::Acyclic => write!(f, "acyclic"),
            Diagnosis::Violation { path, kind } => write!(f, "{kind:?} at node {path:?}"),
        }
    }
}

/// Checks the acyclicity conditions. Operands of a conjunctive node are
/// checked in order: each must share at most one variable with the
/// operands before it.
pub fn check_acyclic(f: &AcFormula) -> Diagnosis {
    let mut path = Vec::new();
    match check_rec(f, true, &mut path) {
        Ok(()) => Diagnosis::Acyclic,
        Err(kind) => Diagnosis::Violation { path, kind },
    }
}

fn check_rec(f: &AcFormula, positive: bool, path: &mut Vec<usize>) -> Result<(), Violation> {
    match f {
        AcFormula::Rational { vars, .. } => {
            if !positive {
                return Err(Violation::RationalUnderNegation);
            }
            let mut seen = BTreeSet::new();
            for v in vars {
                if !seen.insert(v) {
                    return Err(Violation::RepeatedVar(v.clone()));
                }
            }
            Ok(())
        }
        AcFormula::Regular { .. } => Ok(()),
        AcFormula::Not(c) => {
            path.push(0);
            check_rec(c, !positive, path)?;
            path.pop();
            Ok(())
        }
        AcFormula::And(cs) | AcFormula::Or(cs) => {
            let conjunctive = matches!(
                (f, positive),
                (AcFormula::And(_), true) | (AcFormula::Or(_), false)
            );
            let mut seen: BTreeSet<Var> = BTreeSet::new();
            for (i, c) in cs.iter().enumerate() {
                path.push(i);
                check_rec(c, positive, path)?;
                path.pop();
                let fv = c.free_vars();
                if conjunctive {
                    let shared: Vec<Var> = fv.intersection(&seen).cloned().collect();
                    if shared.len() > 1 {
                        path.push(i);
                        return Err(Violation::SharedVars(shared));
                    }
                }
                seen.extend(fv);
            }
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AcError {
    #[error("formula is not acyclic: {0}")]
    NotAcyclic(Diagnosis),
    #[error("empty junction")]
    EmptyJunction,
    #[error(transparent)]
    Transduce(#[from] TransduceError),
}

/// Compiles an acyclic formula into one transducer over its free
/// variables, in the returned order. Negated regular leaves are
/// complemented; every leaf is freshened before combination.
pub fn compile_ac(f: &AcFormula, bits: u32) -> Result<(Aft, Vec<Var>), AcError> {
    let d = check_acyclic(f);
    if !d.is_acyclic() {
        return Err(AcError::NotAcyclic(d));
    }
    compile_rec(&f.nnf(), bits)
}

fn compile_rec(f: &AcFormula, bits: u32) -> Result<(Aft, Vec<Var>), AcError> {
    match f {
        AcFormula::Rational { aft, vars } => Ok((aft.freshen(), vars.clone())),
        AcFormula::Regular { afa, var, negated } => {
            let a = if *negated { complement(afa) } else { afa.clone() };
            let (a, _) = a.freshen();
            Ok((Aft::from_afa(&a, bits)?, vec![var.clone()]))
        }
        AcFormula::And(cs) | AcFormula::Or(cs) => {
            let kind = if matches!(f, AcFormula::And(_)) {
                Junction::And
            } else {
                Junction::Or
            };
            let mut it = cs.iter();
            let first = it.next().ok_or(AcError::EmptyJunction)?;
            let mut acc = compile_rec(first, bits)?;
            for c in it {
                let (t, vs) = compile_rec(c, bits)?;
                let combined = aft_combine(&acc.0, &acc.1, &t, &vs, kind);
                debug_assert!(
                    !matches!(combined, Err(TransduceError::SharedVarLimit(_))),
                    "acyclic formula reached the combiner with shared variables"
                );
                acc = combined?;
            }
            Ok(acc)
        }
        AcFormula::Not(_) => unreachable!("rejected by check_acyclic"),
    }
}

/// Indicator states of one parameter in the two-rail encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rails {
    pub plus: u32,
    pub minus: u32,
}

// Rewrites the parameter literals of an NNF formula.
fn map_param_literals(e: &Expr, f: &dyn Fn(u32, bool) -> Expr) -> Expr {
    match e.kind() {
        Kind::Atom(Atom::Param(s)) => f(*s, true),
        Kind::Not(c) => match c.kind() {
            Kind::Atom(Atom::Param(s)) => f(*s, false),
            _ => e.clone(),
        },
        Kind::And(cs) => Expr::and(cs.iter().map(|c| map_param_literals(c, f))),
        Kind::Or(cs) => Expr::or(cs.iter().map(|c| map_param_literals(c, f))),
        _ => e.clone(),
    }
}

/// Removes the parameters by the two-rail encoding; the result recognises
/// the projection `∃s̄` of the input relation.
pub fn eliminate_params(t: &Aft) -> Aft {
    eliminate_params_with_rails(t).0
}

/// [`eliminate_params`] together with the indicator states of each
/// parameter.
pub fn eliminate_params_with_rails(t: &Aft) -> (Aft, BTreeMap<u32, Rails>) {
    let params = t.params();
    if params.is_empty() {
        return (t.clone(), BTreeMap::new());
    }
    let rails: BTreeMap<u32, Rails> = params
        .iter()
        .map(|s| {
            (
                *s,
                Rails {
                    plus: fresh_state(),
                    minus: fresh_state(),
                },
            )
        })
        .collect();
    let mut delta = t.base().delta().clone();
    for r in rails.values() {
        delta.insert(r.plus, Expr::state(r.plus));
        delta.insert(r.minus, Expr::state(r.minus));
    }
    let init_plus = map_param_literals(&t.base().init().nnf(), &|s, pos| {
        Expr::state(if pos { rails[&s].plus } else { rails[&s].minus })
    });
    let fin_minus = map_param_literals(&t.base().final_formula().nnf(), &|s, pos| {
        Expr::state(if pos { rails[&s].minus } else { rails[&s].plus }).not()
    });
    let choose = Expr::and(
        rails
            .values()
            .map(|r| Expr::or2(&Expr::state(r.plus), &Expr::state(r.minus))),
    );
    let disambiguate = Expr::and(
        rails
            .values()
            .map(|r| Expr::or2(&Expr::state(r.plus).not(), &Expr::state(r.minus).not())),
    );
    let init = Expr::and2(&init_plus, &choose);
    let fin = Expr::and2(&fin_minus, &disambiguate);
    debug_assert!(init.is_positive_on(Atom::is_state));
    debug_assert!(fin.is_negative_on(Atom::is_state));
    let base = Afa::new(t.base().vars().clone(), delta, init, fin)
        .expect("two-rail encoding keeps the polarity invariants");
    let out = Aft::new(
        base,
        t.tracks(),
        t.bits(),
        t.eps_ids().clone(),
        t.active_tracks().clone(),
    )
    .expect("same tracks as the input");
    (out, rails)
}

#[cfg(test)]
mod tests;
