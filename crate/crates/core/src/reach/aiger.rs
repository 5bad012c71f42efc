// SPDX-License-Identifier: Apache-2.0

//! ASCII AIGER (`aag`) export of transition systems, with a reader and a
//! simulator for round trips.
//!
//! State bits become latches `q<id>`. Latches reset to 0, so unless the
//! initial condition is exactly "all bits off", a `started` latch and one
//! choice input `n<id>` per state select an initial configuration in the
//! first step; the bad output then rises one step later than the run it
//! witnesses. Relational systems also take their post-state from the
//! choice inputs. A sticky `broken` latch records a violated initial,
//! transition or input constraint and masks the output from then on.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::formula::{Atom, Expr, Kind};

use super::TransSys;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AigerError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

fn syntax(line: usize, msg: impl Into<String>) -> AigerError {
    AigerError::Syntax {
        line,
        msg: msg.into(),
    }
}

/// And-inverter graph with latches; literals are `2·var + negated`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Aiger {
    pub max_var: u32,
    pub inputs: Vec<u32>,
    /// `(literal, next, reset value)`
    pub latches: Vec<(u32, u32, bool)>,
    pub outputs: Vec<u32>,
    pub ands: Vec<(u32, u32, u32)>,
    pub input_names: Vec<Option<String>>,
    pub latch_names: Vec<Option<String>>,
    pub output_names: Vec<Option<String>>,
}

fn nums(line: &str, n: usize, at: usize) -> Result<Vec<u32>, AigerError> {
    let v: Vec<u32> = line
        .split_whitespace()
        .map(|t| t.parse::<u32>().map_err(|_| syntax(at, format!("bad number {t:?}"))))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(syntax(at, format!("expected {n} numbers, got {}", v.len())));
    }
    Ok(v)
}

impl Aiger {
    pub fn parse(text: &str) -> Result<Aiger, AigerError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (at, header) = lines.next().ok_or_else(|| syntax(1, "empty file"))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("aag") {
            return Err(syntax(at, "missing aag header"));
        }
        let h = nums(&parts.collect::<Vec<_>>().join(" "), 5, at)?;
        let (m, ni, nl, no, na) = (h[0], h[1] as usize, h[2] as usize, h[3] as usize, h[4] as usize);
        if (ni + nl + na) as u32 > m {
            return Err(syntax(at, "more definitions than variables"));
        }
        let mut g = Aiger {
            max_var: m,
            ..Default::default()
        };
        let mut next_line = |what: &str| {
            lines
                .next()
                .ok_or_else(|| syntax(0, format!("unexpected end of file, expected {what}")))
        };
        for _ in 0..ni {
            let (at, l) = next_line("input")?;
            g.inputs.push(nums(l, 1, at)?[0]);
        }
        for _ in 0..nl {
            let (at, l) = next_line("latch")?;
            let n = l.split_whitespace().count();
            if n == 2 {
                let v = nums(l, 2, at)?;
                g.latches.push((v[0], v[1], false));
            } else {
                let v = nums(l, 3, at)?;
                if v[2] > 1 {
                    return Err(syntax(at, "only constant latch resets are supported"));
                }
                g.latches.push((v[0], v[1], v[2] == 1));
            }
        }
        for _ in 0..no {
            let (at, l) = next_line("output")?;
            g.outputs.push(nums(l, 1, at)?[0]);
        }
        for _ in 0..na {
            let (at, l) = next_line("and gate")?;
            let v = nums(l, 3, at)?;
            g.ands.push((v[0], v[1], v[2]));
        }
        g.input_names = vec![None; ni];
        g.latch_names = vec![None; nl];
        g.output_names = vec![None; no];
        for (at, l) in lines {
            if l == "c" || l.starts_with("c ") {
                break;
            }
            let (tag, name) = l
                .split_once(' ')
                .ok_or_else(|| syntax(at, "malformed symbol line"))?;
            let (kind, idx) = tag.split_at(1);
            let idx: usize = idx.parse().map_err(|_| syntax(at, "bad symbol index"))?;
            let table = match kind {
                "i" => &mut g.input_names,
                "l" => &mut g.latch_names,
                "o" => &mut g.output_names,
                _ => return Err(syntax(at, format!("unknown symbol kind {kind}"))),
            };
            *table
                .get_mut(idx)
                .ok_or_else(|| syntax(at, "symbol index out of range"))? = Some(name.to_string());
        }
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<(), AigerError> {
        let mut defined = vec![false; self.max_var as usize + 1];
        let lhs = self
            .inputs
            .iter()
            .chain(self.latches.iter().map(|l| &l.0))
            .chain(self.ands.iter().map(|a| &a.0));
        for l in lhs {
            if l % 2 == 1 || *l == 0 || l / 2 > self.max_var {
                return Err(syntax(0, format!("invalid definition literal {l}")));
            }
            if std::mem::replace(&mut defined[(*l / 2) as usize], true) {
                return Err(syntax(0, format!("literal {l} defined twice")));
            }
        }
        let used = self
            .outputs
            .iter()
            .chain(self.latches.iter().map(|l| &l.1))
            .chain(self.ands.iter().flat_map(|a| [&a.1, &a.2]));
        for l in used {
            if l / 2 > self.max_var || (*l > 1 && !defined[(*l / 2) as usize]) {
                return Err(syntax(0, format!("undefined literal {l}")));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "aag {} {} {} {} {}",
            self.max_var,
            self.inputs.len(),
            self.latches.len(),
            self.outputs.len(),
            self.ands.len()
        );
        for i in &self.inputs {
            let _ = writeln!(s, "{i}");
        }
        for (l, n, r) in &self.latches {
            if *r {
                let _ = writeln!(s, "{l} {n} 1");
            } else {
                let _ = writeln!(s, "{l} {n}");
            }
        }
        for o in &self.outputs {
            let _ = writeln!(s, "{o}");
        }
        for (a, b, c) in &self.ands {
            let _ = writeln!(s, "{a} {b} {c}");
        }
        for (tag, names) in [
            ('i', &self.input_names),
            ('l', &self.latch_names),
            ('o', &self.output_names),
        ] {
            for (k, n) in names.iter().enumerate() {
                if let Some(n) = n {
                    let _ = writeln!(s, "{tag}{k} {n}");
                }
            }
        }
        s
    }

    pub fn reset(&self) -> Vec<bool> {
        self.latches.iter().map(|l| l.2).collect()
    }

    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.input_names.iter().position(|n| n.as_deref() == Some(name))
    }

    pub fn latch_index(&self, name: &str) -> Option<usize> {
        self.latch_names.iter().position(|n| n.as_deref() == Some(name))
    }

    /// One clock step: next latch values and the outputs, both computed
    /// from the current latches and inputs.
    pub fn step(&self, latches: &[bool], inputs: &[bool]) -> (Vec<bool>, Vec<bool>) {
        let mut val = vec![false; self.max_var as usize + 1];
        for (i, l) in self.inputs.iter().enumerate() {
            val[(*l / 2) as usize] = inputs[i];
        }
        for (i, l) in self.latches.iter().enumerate() {
            val[(l.0 / 2) as usize] = latches[i];
        }
        let lit = |val: &[bool], l: u32| val[(l / 2) as usize] ^ (l % 2 == 1);
        for (a, b, c) in &self.ands {
            val[(*a / 2) as usize] = lit(&val, *b) && lit(&val, *c);
        }
        let next = self.latches.iter().map(|l| lit(&val, l.1)).collect();
        let outs = self.outputs.iter().map(|o| lit(&val, *o)).collect();
        (next, outs)
    }
}

struct Netlist {
    next_var: u32,
    ands: Vec<(u32, u32, u32)>,
    and_memo: HashMap<(u32, u32), u32>,
    memo: HashMap<u64, u32>,
    atoms: HashMap<Atom, u32>,
}

impl Netlist {
    fn and(&mut self, a: u32, b: u32) -> u32 {
        let (a, b) = if a > b { (a, b) } else { (b, a) };
        if b == 0 {
            return 0;
        }
        if b == 1 {
            return a;
        }
        if a == b {
            return a;
        }
        if a ^ 1 == b {
            return 0;
        }
        if let Some(l) = self.and_memo.get(&(a, b)) {
            return *l;
        }
        self.next_var += 1;
        let out = 2 * self.next_var;
        self.ands.push((out, a, b));
        self.and_memo.insert((a, b), out);
        out
    }

    fn or(&mut self, a: u32, b: u32) -> u32 {
        self.and(a ^ 1, b ^ 1) ^ 1
    }

    fn expr(&mut self, e: &Expr) -> u32 {
        if let Some(l) = self.memo.get(&e.id()) {
            return *l;
        }
        let out = match e.kind() {
            Kind::Const(b) => *b as u32,
            Kind::Atom(a) => *self
                .atoms
                .get(a)
                .unwrap_or_else(|| panic!("atom {a} has no AIGER signal")),
            Kind::Not(c) => self.expr(c) ^ 1,
            Kind::And(cs) => {
                let mut acc = 1;
                for c in cs {
                    let l = self.expr(c);
                    acc = self.and(acc, l);
                }
                acc
            }
            Kind::Or(cs) => {
                let mut acc = 0;
                for c in cs {
                    let l = self.expr(c);
                    acc = self.or(acc, l);
                }
                acc
            }
        };
        self.memo.insert(e.id(), out);
        out
    }
}

/// What an exported system looks like from the outside.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AigerLayout {
    /// The first step only selects the initial configuration.
    pub reset_gadget: bool,
    /// Post-states are read from the `n<id>` inputs.
    pub relational: bool,
}

fn only_all_zero(ts: &TransSys) -> bool {
    let zero = ts.holds_init(&Default::default());
    zero && !crate::formula::is_sat(&Expr::and2(
        &ts.init,
        &Expr::or(ts.states.iter().map(|q| Expr::state(*q))),
    ))
}

/// Exports `ts` with a single output that is high when a final
/// configuration has been reached along a valid run.
pub fn export_aiger(ts: &TransSys) -> (Aiger, AigerLayout) {
    let gadget = !only_all_zero(ts);
    let relational = ts.updates.is_none();
    let needs_choice = gadget || relational;
    let mut input_atoms: Vec<(Atom, String)> = ts
        .step_inputs()
        .into_iter()
        .map(|a| (a, a.to_string()))
        .collect();
    if needs_choice {
        input_atoms.extend(ts.states.iter().map(|q| (Atom::Next(*q), format!("n{q}"))));
    }
    let invariant_trivial = match &ts.updates {
        Some((_, inv)) => inv.is_true(),
        None => ts.trans.is_true(),
    };
    let needs_broken = gadget || !invariant_trivial;
    let mut latch_names: Vec<String> = ts.states.iter().map(|q| format!("q{q}")).collect();
    if gadget {
        latch_names.push("started".into());
    }
    if needs_broken {
        latch_names.push("broken".into());
    }
    let ni = input_atoms.len() as u32;
    let mut net = Netlist {
        next_var: ni + latch_names.len() as u32,
        ands: Vec::new(),
        and_memo: HashMap::new(),
        memo: HashMap::new(),
        atoms: HashMap::new(),
    };
    for (k, (a, _)) in input_atoms.iter().enumerate() {
        net.atoms.insert(*a, 2 * (k as u32 + 1));
    }
    let latch_lit = |k: usize| 2 * (ni + k as u32 + 1);
    for (k, q) in ts.states.iter().enumerate() {
        net.atoms.insert(Atom::State(*q), latch_lit(k));
    }
    let started = gadget.then(|| latch_lit(ts.states.len()));
    let broken = needs_broken.then(|| latch_lit(latch_names.len() - 1));
    // state updates
    let mut nexts: Vec<u32> = Vec::new();
    for q in &ts.states {
        let choice = net.atoms.get(&Atom::Next(*q)).copied();
        let run = match &ts.updates {
            Some((u, _)) => net.expr(&u[q]),
            None => choice.expect("relational systems read their post-state"),
        };
        let l = match started {
            Some(s) => {
                let a = net.and(s, run);
                let b = net.and(s ^ 1, choice.expect("gadget choice input"));
                net.or(a, b)
            }
            None => run,
        };
        nexts.push(l);
    }
    if gadget {
        nexts.push(1);
    }
    if let Some(b) = broken {
        let step = match &ts.updates {
            Some((_, inv)) => net.expr(inv),
            None => net.expr(&ts.trans),
        };
        let violated = match started {
            Some(s) => {
                let chosen_init = ts.init.rename(|a| match a {
                    Atom::State(q) => Atom::Next(q),
                    o => o,
                });
                let init_ok = net.expr(&chosen_init);
                let bad_init = net.and(s ^ 1, init_ok ^ 1);
                let bad_step = net.and(s, step ^ 1);
                net.or(bad_init, bad_step)
            }
            None => step ^ 1,
        };
        nexts.push(net.or(b, violated));
    }
    let fin = net.expr(&ts.fin);
    let mut bad = fin;
    if let Some(b) = broken {
        bad = net.and(bad, b ^ 1);
    }
    if let Some(s) = started {
        bad = net.and(bad, s);
    }
    let latches = nexts
        .iter()
        .enumerate()
        .map(|(k, n)| (latch_lit(k), *n, false))
        .collect();
    let aig = Aiger {
        max_var: net.next_var,
        inputs: (1..=ni).map(|v| 2 * v).collect(),
        latches,
        outputs: vec![bad],
        ands: net.ands,
        input_names: input_atoms.into_iter().map(|(_, n)| Some(n)).collect(),
        latch_names: latch_names.into_iter().map(Some).collect(),
        output_names: vec![Some("bad".into())],
    };
    (
        aig,
        AigerLayout {
            reset_gadget: gadget,
            relational,
        },
    )
}

/// Input vector for one step, from named values; unnamed inputs are 0.
pub fn input_vector(aig: &Aiger, values: &BTreeMap<String, bool>) -> Vec<bool> {
    aig.input_names
        .iter()
        .map(|n| n.as_ref().and_then(|n| values.get(n)).copied().unwrap_or(false))
        .collect()
}
