// SPDX-License-Identifier: Apache-2.0

//! End-to-end frontend: Boolean skeleton to clauses, clause
//! classification, the acyclic or straight-line pipeline, emptiness and
//! model decoding.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::Duration;

use crate::acsolve::{compile_ac, eliminate_params, AcFormula};
use crate::automata::Afa;
use crate::formula::{enum_models, is_sat, Atom, Expr};
use crate::par;
use crate::reach::{check_reach, encode, export_aiger, Encoding, ReachOptions, ReachResult, Trace};
use crate::slsolve::{
    classify, reconstruct, run_pipeline, to_ac, to_sl, Constraint, Fragment, Literal, Names, Recon,
    Term,
};
use crate::transduce::{alphabet, data, eps_on, fresh_eps, reads, replace_transducer, same_char, Aft, Var, Word};

pub mod parse;
pub mod verify;

pub use parse::{parse, quote, BoolTerm, ParseError, Pos, Rule, StrFormula, StrTerm, Sym, TransducerDef};
pub use verify::{check_model, Model};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    pub bits: u32,
    pub encoding: Encoding,
    pub reach: ReachOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            bits: 8,
            encoding: Encoding::Direct,
            reach: ReachOptions::default(),
        }
    }
}

impl SolveOptions {
    pub fn with_budget(mut self, configs: usize, secs: u64) -> Self {
        self.reach.max_configs = configs;
        self.reach.time_limit = Some(Duration::from_secs(secs));
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Sat(Model),
    Unsat,
    Unknown(String),
}

impl Verdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Sat(_) => 0,
            Verdict::Unsat => 1,
            Verdict::Unknown(_) => 2,
        }
    }
}

/// The state table as a transducer over the tracks (output, input).
pub fn transducer_to_aft(t: &TransducerDef, bits: u32) -> Aft {
    const OUT: u32 = 1;
    const IN: u32 = 2;
    let e = fresh_eps();
    let eps: BTreeSet<u32> = [e].into();
    let ids: BTreeMap<&str, u32> = t
        .states()
        .into_iter()
        .map(|q| (q, crate::automata::fresh_state()))
        .collect();
    let side = |s: Sym, track: u32| match s {
        Sym::Eps => eps_on(track, &eps),
        Sym::Char(c) => reads(c, bits, track, &eps),
        Sym::Any => data(track, &eps),
    };
    let mut delta: BTreeMap<u32, Vec<Expr>> = ids.values().map(|q| (*q, vec![])).collect();
    for r in &t.rules {
        let mut g = vec![side(r.input, IN), side(r.output, OUT), Expr::state(ids[r.to.as_str()])];
        if r.input == Sym::Any && r.output == Sym::Any {
            g.push(same_char(OUT, IN, bits));
        }
        delta.get_mut(&ids[r.from.as_str()]).expect("known state").push(Expr::and(g));
    }
    let fin = Expr::and(
        ids.iter()
            .filter(|(q, _)| !t.finals.contains(**q))
            .map(|(_, id)| Expr::state(*id).not()),
    );
    let base = Afa::new(
        alphabet(2, bits, &eps),
        delta.into_iter().map(|(q, gs)| (q, Expr::or(gs))).collect(),
        Expr::state(ids[t.init.as_str()]),
        fin,
    )
    .expect("state tables give well-formed automata");
    Aft::new(base, 2, bits, eps, [OUT, IN].into()).expect("two active tracks")
}

struct Lower<'a> {
    bits: u32,
    transducers: &'a BTreeMap<String, Aft>,
    names: Names,
    defs: Vec<Literal>,
}

impl Lower<'_> {
    fn var_of(&mut self, t: &StrTerm) -> Result<Var, String> {
        if let StrTerm::Var(v) = t {
            return Ok(v.clone());
        }
        let x = self.names.fresh("t!0".into());
        let c = self.define(&x, t)?;
        self.defs.push(Literal::pos(c));
        Ok(x)
    }

    fn parts(&mut self, t: &StrTerm, out: &mut Vec<Term>) -> Result<(), String> {
        match t {
            StrTerm::Var(v) => out.push(Term::Var(v.clone())),
            StrTerm::Lit(w) if w.is_empty() => {}
            StrTerm::Lit(w) => out.push(Term::Const(w.clone())),
            StrTerm::Concat(ts) => {
                for t in ts {
                    self.parts(t, out)?;
                }
            }
            r @ StrTerm::Replace { .. } => out.push(Term::Var(self.var_of(r)?)),
        }
        Ok(())
    }

    /// The constraint `lhs = t`.
    fn define(&mut self, lhs: &Var, t: &StrTerm) -> Result<Constraint, String> {
        match t {
            StrTerm::Replace {
                arg,
                pattern,
                replacement,
                all,
            } => {
                if pattern.is_empty() {
                    let rewritten = if *all {
                        (**arg).clone()
                    } else {
                        StrTerm::Concat(vec![StrTerm::Lit(replacement.clone()), (**arg).clone()])
                    };
                    return self.define(lhs, &rewritten);
                }
                let aft = replace_transducer(pattern, replacement, *all, self.bits)
                    .map_err(|e| e.to_string())?;
                Ok(Constraint::Transduction {
                    lhs: lhs.clone(),
                    aft,
                    arg: self.var_of(arg)?,
                })
            }
            _ => {
                let mut rhs = Vec::new();
                self.parts(t, &mut rhs)?;
                Ok(Constraint::Equation {
                    lhs: lhs.clone(),
                    rhs,
                })
            }
        }
    }

    fn atom(&mut self, a: &BoolTerm) -> Result<Constraint, String> {
        match a {
            BoolTerm::Eq(x, y) => match (x, y) {
                (StrTerm::Var(v), t) | (t, StrTerm::Var(v)) => self.define(v, t),
                _ => {
                    let v = self.var_of(x)?;
                    self.define(&v, y)
                }
            },
            BoolTerm::Transduce { lhs, name, arg } => Ok(Constraint::Transduction {
                lhs: self.var_of(lhs)?,
                aft: self.transducers[name].clone(),
                arg: self.var_of(arg)?,
            }),
            BoolTerm::InRe(t, re) => Ok(Constraint::Regular {
                afa: re.to_afa(self.bits),
                var: self.var_of(t)?,
            }),
            _ => unreachable!("not an atom"),
        }
    }
}

/// Propositional abstraction: atoms become `Aux(i)`.
#[derive(Default)]
struct Skeleton {
    atoms: Vec<BoolTerm>,
}

impl Skeleton {
    fn abstract_(&mut self, f: &BoolTerm) -> Expr {
        match f {
            BoolTerm::Const(b) => Expr::constant(*b),
            BoolTerm::Eq(a, b) if a == b => Expr::tt(),
            BoolTerm::Not(g) => self.abstract_(g).not(),
            BoolTerm::And(gs) => Expr::and(gs.iter().map(|g| self.abstract_(g)).collect::<Vec<_>>()),
            BoolTerm::Or(gs) => Expr::or(gs.iter().map(|g| self.abstract_(g)).collect::<Vec<_>>()),
            atom => {
                let i = match self.atoms.iter().position(|a| a == atom) {
                    Some(i) => i,
                    None => {
                        self.atoms.push(atom.clone());
                        self.atoms.len() - 1
                    }
                };
                Expr::atom(Atom::Aux(i as u32))
            }
        }
    }
}

/// Clauses of a DNF of `phi` over `Aux(0..n)`: each model found is
/// shrunk to an implicant (dropping negative literals first), which is
/// then blocked.
pub fn dnf_clauses(phi: &Expr, n: usize) -> Vec<Vec<(usize, bool)>> {
    let universe: Vec<Atom> = (0..n as u32).map(Atom::Aux).collect();
    let neg = phi.not();
    let mut rest = phi.clone();
    let mut out = Vec::new();
    while let Some(m) = enum_models(&rest, &universe, None).next() {
        let mut lits: Vec<(Atom, bool)> =
            universe.iter().map(|a| (*a, m.get(*a).unwrap_or(false))).collect();
        let mut order: Vec<(Atom, bool)> = lits.iter().filter(|l| !l.1).copied().collect();
        order.extend(lits.iter().filter(|l| l.1).copied());
        for cand in order {
            let trial: Vec<(Atom, bool)> = lits.iter().filter(|l| **l != cand).copied().collect();
            let cube = Expr::and(trial.iter().map(|(a, b)| Expr::lit(*a, *b)).collect::<Vec<_>>());
            if !is_sat(&Expr::and2(&neg, &cube)) {
                lits = trial;
            }
        }
        let cube = Expr::and(lits.iter().map(|(a, b)| Expr::lit(*a, *b)).collect::<Vec<_>>());
        rest = Expr::and2(&rest, &cube.not());
        out.push(
            lits.into_iter()
                .map(|(a, b)| match a {
                    Atom::Aux(i) => (i as usize, b),
                    _ => unreachable!(),
                })
                .collect(),
        );
    }
    out
}

/// The clauses of a formula, lowered to literals over its variables and
/// fresh ones.
pub fn clauses(f: &StrFormula, bits: u32) -> Vec<Result<Vec<Literal>, String>> {
    let mut sk = Skeleton::default();
    let phi = Expr::and(f.assertions.iter().map(|a| sk.abstract_(a)).collect::<Vec<_>>());
    let transducers: BTreeMap<String, Aft> = f
        .transducers
        .iter()
        .map(|(n, t)| (n.clone(), transducer_to_aft(t, bits)))
        .collect();
    dnf_clauses(&phi, sk.atoms.len())
        .into_iter()
        .map(|clause| {
            let mut lw = Lower {
                bits,
                transducers: &transducers,
                names: Names::new(f.vars.iter().cloned()),
                defs: Vec::new(),
            };
            let mut lits = Vec::new();
            for (i, positive) in clause {
                let c = lw.atom(&sk.atoms[i])?;
                lits.push(Literal { constraint: c, positive });
            }
            lits.extend(lw.defs);
            Ok(lits)
        })
        .collect()
}

/// One transducer whose tracks are `vars`, recognising the projection of
/// the clause onto them; `recon` rebuilds the variables the pipeline
/// eliminated.
pub struct Compiled {
    pub aft: Aft,
    pub vars: Vec<Var>,
    pub recon: Vec<Recon>,
}

pub fn compile_clause(lits: &[Literal], bits: u32) -> Result<Option<Compiled>, String> {
    if lits.is_empty() {
        return Ok(None);
    }
    let (f, recon): (AcFormula, Vec<Recon>) = match classify(lits) {
        Fragment::Ac | Fragment::ExtendedAc => (to_ac(lits, bits).map_err(|e| e.to_string())?, vec![]),
        Fragment::Sl => {
            let sl = to_sl(lits, bits).map_err(|e| e.to_string())?;
            run_pipeline(&sl).map_err(|e| e.to_string())?
        }
        Fragment::Unsupported(r) => return Err(format!("unsupported clause: {r}")),
    };
    let (t, vars) = compile_ac(&f, bits).map_err(|e| e.to_string())?;
    Ok(Some(Compiled {
        aft: eliminate_params(&t),
        vars,
        recon,
    }))
}

/// Per-track compaction of the letters of `trace`; unconstrained bits read
/// as zero.
pub fn decode_model(trace: &Trace, aft: &Aft, vars: &[Var]) -> Model {
    vars.iter().cloned().zip(aft.compact(&trace.word())).collect()
}

fn solve_clause(lits: &Result<Vec<Literal>, String>, opts: &SolveOptions) -> Verdict {
    let lits = match lits {
        Ok(l) => l,
        Err(e) => return Verdict::Unknown(e.clone()),
    };
    let c = match compile_clause(lits, opts.bits) {
        Ok(Some(c)) => c,
        Ok(None) => return Verdict::Sat(Model::new()),
        Err(e) => return Verdict::Unknown(e),
    };
    let ts = encode(c.aft.base(), opts.encoding);
    match check_reach(&ts, &opts.reach) {
        ReachResult::Reachable(trace) => {
            let mut m = decode_model(&trace, &c.aft, &c.vars);
            reconstruct(&mut m, &c.recon);
            Verdict::Sat(m)
        }
        ReachResult::Unreachable => Verdict::Unsat,
        ReachResult::BudgetExceeded { explored } => {
            Verdict::Unknown(format!("budget exceeded after {explored} configurations"))
        }
    }
}

/// Decides `f`. A model is reported only after it passes the direct
/// evaluation of every assertion; it maps each declared variable.
pub fn solve(f: &StrFormula, opts: &SolveOptions) -> Verdict {
    let cs = clauses(f, opts.bits);
    let verdicts = par::map(&cs, |c| solve_clause(c, opts));
    let mut unknown = None;
    for v in verdicts {
        match v {
            Verdict::Sat(m) => {
                let m: Model = f
                    .vars
                    .iter()
                    .map(|x| (x.clone(), m.get(x).cloned().unwrap_or_default()))
                    .collect();
                if check_model(f, &m) {
                    return Verdict::Sat(m);
                }
                log::warn!("discarding a model that fails verification");
                unknown.get_or_insert_with(|| "model failed verification".to_string());
            }
            Verdict::Unknown(r) => {
                unknown.get_or_insert(r);
            }
            Verdict::Unsat => {}
        }
    }
    match unknown {
        Some(r) => Verdict::Unknown(r),
        None => Verdict::Unsat,
    }
}

/// ASCII AIGER text for the transition system of each clause, or why the
/// clause has none.
pub fn export_clauses(f: &StrFormula, opts: &SolveOptions) -> Vec<Result<String, String>> {
    clauses(f, opts.bits)
        .iter()
        .map(|lits| {
            let lits = lits.as_ref().map_err(Clone::clone)?;
            let c = compile_clause(lits, opts.bits)?
                .ok_or_else(|| "clause without constraints".to_string())?;
            Ok(export_aiger(&encode(c.aft.base(), opts.encoding)).0.to_text())
        })
        .collect()
}

/// Solver output: the verdict line, then the model when asked for.
pub fn render(v: &Verdict, f: &StrFormula, show_model: bool) -> String {
    let mut s = String::new();
    match v {
        Verdict::Sat(m) => {
            s.push_str("sat\n");
            if show_model {
                s.push_str("(model\n");
                for x in &f.vars {
                    let w: &Word = m.get(x).expect("every declared variable");
                    let _ = writeln!(s, "  (define-fun {x} () String {})", quote(w));
                }
                s.push_str(")\n");
            }
        }
        Verdict::Unsat => s.push_str("unsat\n"),
        Verdict::Unknown(_) => s.push_str("unknown\n"),
    }
    s
}
