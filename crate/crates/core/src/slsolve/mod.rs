// SPDX-License-Identifier: Apache-2.0

//! Clause classification and the straight-line pipeline, which rewrites a
//! straight-line conjunction into an equisatisfiable acyclic formula with
//! synchronisation parameters.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::acsolve::{AcError, AcFormula};
use crate::automata::{Afa, Regex};
use crate::transduce::{equation_to_aft, length_to_aft, Aft, LengthSpec, TransduceError, Var, Word};

mod pipeline;

pub use pipeline::{
    check_straight_line, preprocess, reorder, run_pipeline, split_binary, split_binary_traced,
    substitute_equations, WeightLedger,
};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    Const(Word),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

/// One atom of a clause.
#[derive(Clone, Debug)]
pub enum Constraint {
    /// `lhs = t_1 ∘ … ∘ t_n`
    Equation { lhs: Var, rhs: Vec<Term> },
    /// `lhs = R(arg)`, i.e. `R(lhs, arg)`.
    Transduction { lhs: Var, aft: Aft, arg: Var },
    /// `R(x_1, …, x_k)`
    Relation { aft: Aft, vars: Vec<Var> },
    Regular { afa: Afa, var: Var },
    Length { spec: LengthSpec, vars: Vec<Var> },
}

impl Constraint {
    /// String variables, in order and with repetitions. Constants do not
    /// count.
    pub fn vars(&self) -> Vec<Var> {
        match self {
            Constraint::Equation { lhs, rhs } => std::iter::once(lhs.clone())
                .chain(rhs.iter().filter_map(|t| t.as_var().cloned()))
                .collect(),
            Constraint::Transduction { lhs, arg, .. } => vec![lhs.clone(), arg.clone()],
            Constraint::Relation { vars, .. } | Constraint::Length { vars, .. } => vars.clone(),
            Constraint::Regular { var, .. } => vec![var.clone()],
        }
    }

    fn is_rational(&self) -> bool {
        matches!(
            self,
            Constraint::Transduction { .. } | Constraint::Relation { .. }
        )
    }
}

#[derive(Clone, Debug)]
pub struct Literal {
    pub constraint: Constraint,
    pub positive: bool,
}

impl Literal {
    pub fn pos(constraint: Constraint) -> Literal {
        Literal {
            constraint,
            positive: true,
        }
    }

    pub fn neg(constraint: Constraint) -> Literal {
        Literal {
            constraint,
            positive: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fragment {
    Ac,
    ExtendedAc,
    Sl,
    Unsupported(String),
}

/// One conjunct of a straight-line conjunction.
#[derive(Clone, Debug)]
pub enum Conjunct {
    Equation {
        lhs: Var,
        rhs: Vec<Term>,
    },
    /// `lhs = R(args_1 ∘ … ∘ args_n)`; a plain rational definition when
    /// there is one argument, a mixed constraint otherwise. `R` may carry
    /// parameters.
    Rational {
        lhs: Var,
        aft: Aft,
        args: Vec<Var>,
    },
    Regular {
        afa: Afa,
        var: Var,
        negated: bool,
    },
}

impl Conjunct {
    pub fn defined(&self) -> Option<&Var> {
        match self {
            Conjunct::Equation { lhs, .. } | Conjunct::Rational { lhs, .. } => Some(lhs),
            Conjunct::Regular { .. } => None,
        }
    }

    /// Variables read by the conjunct (right-hand side or the regular
    /// constraint's variable).
    pub fn uses(&self) -> Vec<Var> {
        match self {
            Conjunct::Equation { rhs, .. } => rhs.iter().filter_map(|t| t.as_var().cloned()).collect(),
            Conjunct::Rational { args, .. } => args.clone(),
            Conjunct::Regular { var, .. } => vec![var.clone()],
        }
    }
}

/// How to rebuild a variable that the pipeline eliminated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Recon {
    /// `var = parts_1 ∘ … ∘ parts_n`
    Concat { var: Var, parts: Vec<Var> },
    /// The variables of `parts` are any split of `source` that matches the
    /// pattern.
    Pattern { source: Var, parts: Vec<Term> },
}

#[derive(Clone, Debug)]
pub struct SlConjunction {
    pub conjuncts: Vec<Conjunct>,
    pub recon: Vec<Recon>,
    pub bits: u32,
}

impl SlConjunction {
    pub fn new(conjuncts: Vec<Conjunct>, bits: u32) -> SlConjunction {
        SlConjunction {
            conjuncts,
            recon: Vec::new(),
            bits,
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.conjuncts
            .iter()
            .flat_map(|c| c.defined().cloned().into_iter().chain(c.uses()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SlError {
    #[error("unsupported clause: {0}")]
    Unsupported(String),
    #[error("definitions are cyclic through {0}")]
    CycleDetected(Var),
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Transduce(#[from] TransduceError),
    #[error(transparent)]
    Ac(#[from] AcError),
}

fn has_repeats(vs: &[Var]) -> Option<Var> {
    let mut seen = BTreeSet::new();
    vs.iter().find(|v| !seen.insert(*v)).cloned()
}

/// An order in which every literal shares at most one variable with the
/// literals before it, if there is one. Literals are peeled greedily from
/// the back: one that shares at most one variable with all the others can
/// always go last.
pub fn ac_order(lits: &[Literal]) -> Option<Vec<usize>> {
    let sets: Vec<BTreeSet<Var>> = lits
        .iter()
        .map(|l| l.constraint.vars().into_iter().collect())
        .collect();
    let mut left: BTreeSet<usize> = (0..lits.len()).collect();
    let mut peeled = Vec::new();
    while !left.is_empty() {
        let pick = left.iter().rev().copied().find(|i| {
            let others: BTreeSet<&Var> = left
                .iter()
                .filter(|j| *j != i)
                .flat_map(|j| sets[*j].iter())
                .collect();
            sets[*i].iter().filter(|v| others.contains(v)).count() <= 1
        })?;
        left.remove(&pick);
        peeled.push(pick);
    }
    peeled.reverse();
    Some(peeled)
}

fn ac_violation(lits: &[Literal], extended: bool) -> Option<String> {
    for l in lits {
        let c = &l.constraint;
        match c {
            Constraint::Equation { .. } if !extended => return Some("word equation".into()),
            Constraint::Length { .. } if !extended => return Some("length constraint".into()),
            Constraint::Length { .. } if !l.positive => {
                return Some("negated length constraint".into())
            }
            _ => {}
        }
        if c.is_rational() && !l.positive {
            return Some("rational constraint under negation".into());
        }
        if matches!(c, Constraint::Regular { .. }) {
            continue;
        }
        if let Some(v) = has_repeats(&c.vars()) {
            return Some(format!("variable {v} repeated in one constraint"));
        }
    }
    if ac_order(lits).is_none() {
        return Some("conjuncts share more than one variable".into());
    }
    None
}

// Defining literals as (lhs, used vars, index); the order is a
// definition-before-use order of the whole clause.
fn sl_order(lits: &[Literal]) -> Result<Vec<usize>, String> {
    let mut defined: BTreeMap<Var, usize> = BTreeMap::new();
    let mut deps: Vec<Vec<Var>> = vec![Vec::new(); lits.len()];
    for (i, l) in lits.iter().enumerate() {
        let c = &l.constraint;
        if !l.positive && !matches!(c, Constraint::Regular { .. }) {
            return Err("only regular constraints may be negated".into());
        }
        let (lhs, used) = match c {
            Constraint::Regular { .. } => continue,
            Constraint::Length { .. } => return Err("length constraint".into()),
            Constraint::Relation { vars, .. } if vars.len() != 2 => {
                return Err(format!("rational constraint of arity {}", vars.len()))
            }
            Constraint::Relation { vars, .. } => (vars[0].clone(), vec![vars[1].clone()]),
            Constraint::Transduction { lhs, arg, .. } => (lhs.clone(), vec![arg.clone()]),
            Constraint::Equation { lhs, rhs } => (
                lhs.clone(),
                rhs.iter().filter_map(|t| t.as_var().cloned()).collect(),
            ),
        };
        if used.contains(&lhs) {
            return Err(format!("variable {lhs} is defined in terms of itself"));
        }
        if defined.insert(lhs.clone(), i).is_some() {
            return Err(format!("variable {lhs} is defined twice"));
        }
        deps[i] = used;
    }
    // Kahn's algorithm, lowest index first.
    let mut done: BTreeSet<Var> = BTreeSet::new();
    let mut pending: BTreeSet<usize> = defined.values().copied().collect();
    let mut order: Vec<usize> = (0..lits.len())
        .filter(|i| matches!(lits[*i].constraint, Constraint::Regular { .. }))
        .collect();
    while !pending.is_empty() {
        let ready = pending
            .iter()
            .copied()
            .find(|i| deps[*i].iter().all(|v| !defined.contains_key(v) || done.contains(v)));
        let Some(i) = ready else {
            let stuck = pending.iter().next().expect("nonempty");
            let v = lits[*stuck].constraint.vars()[0].clone();
            return Err(format!("cyclic definitions through {v}"));
        };
        pending.remove(&i);
        done.insert(lits[i].constraint.vars()[0].clone());
        order.push(i);
    }
    Ok(order)
}

/// Picks the pipeline for a clause: acyclic when possible, then extended
/// acyclic, then straight-line. An unsupported clause reports the first
/// straight-line condition it violates.
pub fn classify(lits: &[Literal]) -> Fragment {
    if ac_violation(lits, false).is_none() {
        return Fragment::Ac;
    }
    if ac_violation(lits, true).is_none() {
        return Fragment::ExtendedAc;
    }
    match sl_order(lits) {
        Ok(_) => Fragment::Sl,
        Err(reason) => Fragment::Unsupported(reason),
    }
}

// Fresh names that avoid every name in use.
pub(crate) struct Names {
    taken: BTreeSet<Var>,
}

impl Names {
    pub(crate) fn new<I: IntoIterator<Item = Var>>(taken: I) -> Names {
        Names {
            taken: taken.into_iter().collect(),
        }
    }

    pub(crate) fn fresh(&mut self, wanted: String) -> Var {
        let mut name = wanted.clone();
        let mut n = 1;
        while self.taken.contains(&name) {
            name = format!("{wanted}#{n}");
            n += 1;
        }
        self.taken.insert(name.clone());
        name
    }
}

pub(crate) fn singleton(w: &[u32], bits: u32) -> Afa {
    Regex::literal(w).to_afa(bits)
}

fn clause_names(lits: &[Literal]) -> Names {
    Names::new(lits.iter().flat_map(|l| l.constraint.vars()))
}

/// Lowers an acyclic or extended acyclic clause. Constants in equations
/// become fresh variables with singleton regular constraints.
pub fn to_ac(lits: &[Literal], bits: u32) -> Result<AcFormula, SlError> {
    if let Some(reason) = ac_violation(lits, true) {
        return Err(SlError::Unsupported(reason));
    }
    let order = ac_order(lits).expect("checked above");
    let mut names = clause_names(lits);
    let mut leaves = Vec::new();
    for i in order {
        let l = &lits[i];
        match &l.constraint {
            Constraint::Equation { lhs, rhs } => {
                let mut consts = Vec::new();
                let rhs_vars: Vec<Var> = rhs
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => v.clone(),
                        Term::Const(w) => {
                            let c = names.fresh("c#0".into());
                            consts.push(AcFormula::regular(singleton(w, bits), &c));
                            c
                        }
                    })
                    .collect();
                let aft = equation_to_aft(lhs, &rhs_vars, !l.positive, bits)?;
                let mut vars = vec![lhs.clone()];
                vars.extend(rhs_vars);
                leaves.push(AcFormula::Rational { aft, vars });
                leaves.extend(consts);
            }
            Constraint::Transduction { lhs, aft, arg } => leaves.push(AcFormula::Rational {
                aft: aft.clone(),
                vars: vec![lhs.clone(), arg.clone()],
            }),
            Constraint::Relation { aft, vars } => leaves.push(AcFormula::Rational {
                aft: aft.clone(),
                vars: vars.clone(),
            }),
            Constraint::Regular { afa, var } => leaves.push(AcFormula::Regular {
                afa: afa.clone(),
                var: var.clone(),
                negated: !l.positive,
            }),
            Constraint::Length { spec, vars } => leaves.push(AcFormula::Rational {
                aft: length_to_aft(spec, vars.len() as u32, bits)?,
                vars: vars.clone(),
            }),
        }
    }
    Ok(match leaves.len() {
        1 => leaves.pop().expect("one leaf"),
        _ => AcFormula::And(leaves),
    })
}

/// Arranges a straight-line clause as a straight-line conjunction:
/// regular constraints first, then definitions before their uses.
pub fn to_sl(lits: &[Literal], bits: u32) -> Result<SlConjunction, SlError> {
    let order = sl_order(lits).map_err(SlError::Unsupported)?;
    let conjuncts = order
        .into_iter()
        .map(|i| {
            let l = &lits[i];
            match &l.constraint {
                Constraint::Equation { lhs, rhs } => Conjunct::Equation {
                    lhs: lhs.clone(),
                    rhs: rhs.clone(),
                },
                Constraint::Transduction { lhs, aft, arg } => Conjunct::Rational {
                    lhs: lhs.clone(),
                    aft: aft.clone(),
                    args: vec![arg.clone()],
                },
                Constraint::Relation { aft, vars } => Conjunct::Rational {
                    lhs: vars[0].clone(),
                    aft: aft.clone(),
                    args: vec![vars[1].clone()],
                },
                Constraint::Regular { afa, var } => Conjunct::Regular {
                    afa: afa.clone(),
                    var: var.clone(),
                    negated: !l.positive,
                },
                Constraint::Length { .. } => unreachable!("rejected by sl_order"),
            }
        })
        .collect();
    Ok(SlConjunction::new(conjuncts, bits))
}

/// Splits `w` as `parts`: constants must match literally, variables take
/// any infix. The leftmost split with the shortest variables wins.
pub fn split_by_pattern(w: &[u32], parts: &[Term]) -> Option<BTreeMap<Var, Word>> {
    fn go(w: &[u32], parts: &[Term], out: &mut BTreeMap<Var, Word>) -> bool {
        let Some((first, rest)) = parts.split_first() else {
            return w.is_empty();
        };
        match first {
            Term::Const(c) => w.starts_with(c) && go(&w[c.len()..], rest, out),
            Term::Var(v) => (0..=w.len()).any(|n| {
                out.insert(v.clone(), w[..n].to_vec());
                go(&w[n..], rest, out)
            }),
        }
    }
    let mut out = BTreeMap::new();
    go(w, parts, &mut out).then_some(out)
}

/// Rebuilds eliminated variables, latest elimination first. Variables the
/// model does not mention are taken to be empty.
pub fn reconstruct(model: &mut BTreeMap<Var, Word>, recon: &[Recon]) {
    for r in recon.iter().rev() {
        match r {
            Recon::Concat { var, parts } => {
                let w: Word = parts
                    .iter()
                    .flat_map(|p| model.get(p).cloned().unwrap_or_default())
                    .collect();
                model.insert(var.clone(), w);
            }
            Recon::Pattern { source, parts } => {
                let w = model.get(source).cloned().unwrap_or_default();
                if let Some(split) = split_by_pattern(&w, parts) {
                    model.extend(split);
                }
            }
        }
    }
}
