// SPDX-License-Identifier: Apache-2.0

//! Emptiness of alternating automata as reachability in Boolean
//! transition systems.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::time::{Duration, Instant};

use crate::automata::{fresh_state, Afa};
use crate::formula::{enum_models, Assignment, Atom, Expr, Kind, SatContext};

mod aiger;

pub use aiger::{export_aiger, input_vector, Aiger, AigerError, AigerLayout};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Encoding {
    Direct,
    Minimal,
    Deterministic,
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoding::Direct => "direct",
            Encoding::Minimal => "minimal",
            Encoding::Deterministic => "deterministic",
        })
    }
}

/// `State(q)` atoms are the current state bits, `Next(q)` the post-state
/// copies. Letter bits and branch choices (`Aux`) are free inputs of every
/// step.
#[derive(Clone, Debug)]
pub struct TransSys {
    pub states: Vec<u32>,
    pub inputs: Vec<Atom>,
    pub hvars: Vec<Atom>,
    pub init: Expr,
    pub trans: Expr,
    pub fin: Expr,
    pub encoding: Encoding,
    /// For systems whose post-state is a function of the pre-state and
    /// the inputs: the update of each state bit and the remaining input
    /// constraint. `trans` is then `⋀ q′ ↔ update(q) ∧ invariant`.
    pub updates: Option<(BTreeMap<u32, Expr>, Expr)>,
}

fn prime(e: &Expr) -> Expr {
    e.rename(|a| match a {
        Atom::State(q) => Atom::Next(q),
        o => o,
    })
}

fn with_state(e: &Expr, q: u32, v: bool) -> Expr {
    e.substitute_with(|a| (a == Atom::State(q)).then(|| Expr::constant(v)))
}

fn with_next(e: &Expr, q: u32, v: bool) -> Expr {
    e.substitute_with(|a| (a == Atom::Next(q)).then(|| Expr::constant(v)))
}

fn param_free(a: &Afa) {
    assert!(
        a.params().is_empty(),
        "parameters must be eliminated before the emptiness check"
    );
}

fn letter_atoms(a: &Afa) -> Vec<Atom> {
    a.vars().iter().copied().collect()
}

fn step_formula(a: &Afa) -> Expr {
    Expr::and(
        a.delta()
            .iter()
            .map(|(q, d)| Expr::implies(&Expr::state(*q), &prime(d))),
    )
}

impl TransSys {
    pub fn state_atoms(&self) -> Vec<Atom> {
        self.states.iter().map(|q| Atom::State(*q)).collect()
    }

    pub fn next_atoms(&self) -> Vec<Atom> {
        self.states.iter().map(|q| Atom::Next(*q)).collect()
    }

    /// Letter bits followed by branch choices.
    pub fn step_inputs(&self) -> Vec<Atom> {
        self.inputs.iter().chain(&self.hvars).copied().collect()
    }

    pub fn holds_init(&self, config: &BTreeSet<u32>) -> bool {
        eval_config(&self.init, config)
    }

    pub fn holds_final(&self, config: &BTreeSet<u32>) -> bool {
        eval_config(&self.fin, config)
    }

    /// Evaluates `trans`; atoms missing from `inputs` read false.
    pub fn holds_trans(
        &self,
        pre: &BTreeSet<u32>,
        inputs: &Assignment,
        post: &BTreeSet<u32>,
    ) -> bool {
        self.trans.evaluate_with(|a| match a {
            Atom::State(q) => pre.contains(&q),
            Atom::Next(q) => post.contains(&q),
            o => inputs.get(o).unwrap_or(false),
        })
    }

    /// Checks that `trans` only mentions the declared atoms and that
    /// `init` and `fin` only mention state bits.
    pub fn check(&self) -> Result<(), String> {
        let states: BTreeSet<u32> = self.states.iter().copied().collect();
        let inputs: BTreeSet<Atom> = self.step_inputs().into_iter().collect();
        for a in self.trans.atoms() {
            let ok = match a {
                Atom::State(q) | Atom::Next(q) => states.contains(&q),
                o => inputs.contains(&o),
            };
            if !ok {
                return Err(format!("undeclared atom {a} in the transition relation"));
            }
        }
        for (name, e) in [("init", &self.init), ("final", &self.fin)] {
            if let Some(a) = e
                .atoms()
                .into_iter()
                .find(|a| !matches!(a, Atom::State(q) if states.contains(q)))
            {
                return Err(format!("{name} mentions {a}"));
            }
        }
        Ok(())
    }
}

fn eval_config(e: &Expr, config: &BTreeSet<u32>) -> bool {
    e.evaluate_with(|a| matches!(a, Atom::State(q) if config.contains(&q)))
}

/// `Init = I`, `Trans = ⋀ q → Δ(q)[q̄/q̄′]`, `Final = F`.
pub fn encode_direct(a: &Afa) -> TransSys {
    param_free(a);
    TransSys {
        states: a.states().collect(),
        inputs: letter_atoms(a),
        hvars: Vec::new(),
        init: a.init().clone(),
        trans: step_formula(a),
        fin: a.final_formula().clone(),
        encoding: Encoding::Direct,
        updates: None,
    }
}

/// The direct system restricted to ⊆-minimal initial configurations and
/// to successors that are minimal for the letter read. Minimality is
/// stated bit by bit: no true bit can be switched off.
pub fn encode_minimal(a: &Afa) -> TransSys {
    param_free(a);
    let states: Vec<u32> = a.states().collect();
    let init = a.init().clone();
    let init_min = Expr::and(
        std::iter::once(init.clone()).chain(
            states
                .iter()
                .map(|q| Expr::implies(&Expr::state(*q), &with_state(&init, *q, false).not())),
        ),
    );
    let step = step_formula(a);
    let trans_min = Expr::and(
        std::iter::once(step.clone()).chain(states.iter().map(|q| {
            Expr::implies(&Expr::atom(Atom::Next(*q)), &with_next(&step, *q, false).not())
        })),
    );
    TransSys {
        states,
        inputs: letter_atoms(a),
        hvars: Vec::new(),
        init: init_min,
        trans: trans_min,
        fin: a.final_formula().clone(),
        encoding: Encoding::Minimal,
        updates: None,
    }
}

// Unique initial state: a fresh state whose transition reads the first
// letter from any initial configuration.
fn single_initial(a: &Afa) -> (Afa, u32) {
    if let Kind::Atom(Atom::State(q)) = a.init().kind() {
        return (a.clone(), *q);
    }
    let q0 = fresh_state();
    let first = a
        .init()
        .substitute_with(|x| match x {
            Atom::State(q) => Some(a.transition(q).clone()),
            _ => None,
        });
    let mut delta = a.delta().clone();
    delta.insert(q0, first);
    // the empty word is accepted iff some initial configuration is final
    let accepts_empty = crate::formula::is_sat(&Expr::and2(a.init(), a.final_formula()));
    let fin = if accepts_empty {
        a.final_formula().clone()
    } else {
        Expr::and2(a.final_formula(), &Expr::state(q0).not())
    };
    let out = Afa::new(a.vars().clone(), delta, Expr::state(q0), fin)
        .expect("normalisation keeps the polarity invariants");
    (out, q0)
}

struct DetBuilder {
    next_h: u32,
    hvars: Vec<Atom>,
    assign: BTreeMap<u32, Vec<Expr>>,
}

impl DetBuilder {
    // StateAsgn and InputInv in one pass, so both see the same h_l.
    fn walk(&mut self, e: &Expr, guard: &Expr) -> Expr {
        match e.kind() {
            Kind::Atom(Atom::State(q)) => {
                self.assign.entry(*q).or_default().push(guard.clone());
                Expr::tt()
            }
            Kind::And(cs) => Expr::and(cs.iter().map(|c| self.walk(c, guard)).collect::<Vec<_>>()),
            Kind::Or(cs) => {
                let (first, rest) = cs.split_first().expect("n-ary");
                let rest = if rest.len() == 1 {
                    rest[0].clone()
                } else {
                    Expr::or(rest.iter().cloned())
                };
                let h = Atom::Aux(self.next_h);
                self.next_h += 1;
                self.hvars.push(h);
                let hx = Expr::atom(h);
                let left = self.walk(first, &Expr::and2(guard, &hx));
                let right = self.walk(&rest, &Expr::and2(guard, &hx.not()));
                Expr::and2(&Expr::implies(&hx, &left), &Expr::implies(&hx.not(), &right))
            }
            _ => e.clone(),
        }
    }
}

/// Deterministic updates `q′ ↔ NewState(q)`, with one branch variable per
/// disjunction of a transition formula, and an input invariant tying the
/// letter to the chosen branches.
pub fn encode_deterministic(a: &Afa) -> TransSys {
    param_free(a);
    let (a, q0) = single_initial(a);
    let states: Vec<u32> = a.states().collect();
    let mut b = DetBuilder {
        next_h: 0,
        hvars: Vec::new(),
        assign: BTreeMap::new(),
    };
    let mut inv = Vec::new();
    for (q, d) in a.delta() {
        let ii = b.walk(&d.nnf(), &Expr::state(*q));
        inv.push(Expr::implies(&Expr::state(*q), &ii));
    }
    let invariant = Expr::and(inv);
    let updates: BTreeMap<u32, Expr> = states
        .iter()
        .map(|q| (*q, Expr::or(b.assign.get(q).cloned().unwrap_or_default())))
        .collect();
    let trans = Expr::and(
        updates
            .iter()
            .map(|(q, u)| Expr::iff(&Expr::atom(Atom::Next(*q)), u))
            .chain([invariant.clone()]),
    );
    let init = Expr::and(
        states
            .iter()
            .map(|q| Expr::lit(Atom::State(*q), *q == q0)),
    );
    TransSys {
        states,
        inputs: letter_atoms(&a),
        hvars: b.hvars,
        init,
        trans,
        fin: a.final_formula().clone(),
        encoding: Encoding::Deterministic,
        updates: Some((updates, invariant)),
    }
}

pub fn encode(a: &Afa, encoding: Encoding) -> TransSys {
    match encoding {
        Encoding::Direct => encode_direct(a),
        Encoding::Minimal => encode_minimal(a),
        Encoding::Deterministic => encode_deterministic(a),
    }
}

/// A run of a transition system: `letters[i]` (letter bits and branch
/// choices) leads from `configs[i]` to `configs[i + 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub configs: Vec<BTreeSet<u32>>,
    pub letters: Vec<Assignment>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Initial first configuration, every step allowed by `trans`, final
    /// last configuration.
    pub fn replays(&self, ts: &TransSys) -> bool {
        self.configs.len() == self.letters.len() + 1
            && ts.holds_init(&self.configs[0])
            && self
                .letters
                .iter()
                .enumerate()
                .all(|(i, l)| ts.holds_trans(&self.configs[i], l, &self.configs[i + 1]))
            && ts.holds_final(self.configs.last().expect("nonempty"))
    }

    /// The letter bits of each step, branch choices dropped.
    pub fn word(&self) -> Vec<Assignment> {
        self.letters
            .iter()
            .map(|l| l.project(Atom::is_letter_bit))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReachOptions {
    pub max_configs: usize,
    pub time_limit: Option<Duration>,
    /// Drop configurations that have a visited subset.
    pub antichain: bool,
}

impl Default for ReachOptions {
    fn default() -> Self {
        ReachOptions {
            max_configs: 100_000,
            time_limit: Some(Duration::from_secs(60)),
            antichain: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReachResult {
    Reachable(Trace),
    Unreachable,
    BudgetExceeded { explored: usize },
}

impl ReachResult {
    pub fn is_reachable(&self) -> bool {
        matches!(self, ReachResult::Reachable(_))
    }
}

struct Node {
    config: BTreeSet<u32>,
    bits: Vec<u64>,
    parent: Option<(usize, Assignment)>,
    live: bool,
}

fn trace_to(nodes: &[Node], mut i: usize) -> Trace {
    let mut configs = vec![nodes[i].config.clone()];
    let mut letters = Vec::new();
    while let Some((p, l)) = &nodes[i].parent {
        configs.push(nodes[*p].config.clone());
        letters.push(l.clone());
        i = *p;
    }
    configs.reverse();
    letters.reverse();
    Trace { configs, letters }
}

/// Successor computation shared by the engine and the bounded layers.
pub struct Successors {
    ctx: SatContext,
    states: Vec<u32>,
    next: Vec<Atom>,
    observe: Vec<Atom>,
}

impl Successors {
    pub fn new(ts: &TransSys) -> Successors {
        let mut ctx = SatContext::new();
        ctx.assert(&ts.trans);
        Successors {
            ctx,
            states: ts.states.clone(),
            next: ts.next_atoms(),
            observe: ts.step_inputs(),
        }
    }

    /// ⊆-minimal successors of `config`, each with the inputs of a step
    /// that produces it.
    pub fn minimal(&mut self, config: &BTreeSet<u32>) -> Vec<(BTreeSet<u32>, Assignment)> {
        let assumptions: Vec<(Atom, bool)> = self
            .states
            .iter()
            .map(|q| (Atom::State(*q), config.contains(q)))
            .collect();
        let mut universe = self.next.clone();
        universe.extend_from_slice(&self.observe);
        let next = self.next.clone();
        self.ctx
            .models(&assumptions, &universe, Some(&next))
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

/// ⊆-minimal initial configurations. Conjuncts of `init` that share no
/// state are enumerated separately and the results multiplied out.
pub fn initial_configs(ts: &TransSys) -> Vec<BTreeSet<u32>> {
    let parts = ts.init.conjuncts();
    let mut owner: Vec<usize> = (0..parts.len()).collect();
    fn root(owner: &mut [usize], mut i: usize) -> usize {
        while owner[i] != i {
            owner[i] = owner[owner[i]];
            i = owner[i];
        }
        i
    }
    let mut first_user: BTreeMap<Atom, usize> = BTreeMap::new();
    for (i, p) in parts.iter().enumerate() {
        for a in p.atoms() {
            let j = *first_user.entry(a).or_insert(i);
            let (ri, rj) = (root(&mut owner, i), root(&mut owner, j));
            owner[ri] = rj;
        }
    }
    let mut groups: BTreeMap<usize, Vec<Expr>> = BTreeMap::new();
    for (i, p) in parts.iter().enumerate() {
        groups.entry(root(&mut owner, i)).or_default().push(p.clone());
    }
    let mut out: Vec<BTreeSet<u32>> = vec![BTreeSet::new()];
    for g in groups.into_values() {
        let e = Expr::and(g);
        let states: Vec<Atom> = e.atoms().into_iter().filter(Atom::is_state).collect();
        let local: Vec<BTreeSet<u32>> = enum_models(&e, &states, Some(&states))
            .map(|m| {
                m.true_atoms()
                    .filter_map(|a| match a {
                        Atom::State(q) => Some(q),
                        _ => None,
                    })
                    .collect()
            })
            .collect();
        out = out
            .iter()
            .flat_map(|c| local.iter().map(move |l| c.union(l).copied().collect()))
            .collect();
        if out.is_empty() {
            break;
        }
    }
    out
}

/// Breadth-first search for a final configuration. Successors are the
/// minimal models of `trans` over the post-state; with `antichain` set, a
/// configuration is dropped when a visited one is a subset of it, and
/// visited supersets of a new configuration stop being expanded.
pub fn check_reach(ts: &TransSys, opts: &ReachOptions) -> ReachResult {
    let start = Instant::now();
    let mut nodes: Vec<Node> = Vec::new();
    let mut seen: BTreeSet<BTreeSet<u32>> = BTreeSet::new();
    let mut queue = VecDeque::new();
    let index = BitIndex::new(ts.states.iter().copied());
    // returns the index of a final node if the insertion found one
    let mut insert = |nodes: &mut Vec<Node>,
                      queue: &mut VecDeque<usize>,
                      config: BTreeSet<u32>,
                      parent: Option<(usize, Assignment)>|
     -> Option<usize> {
        let bits = index.bits(&config);
        if opts.antichain {
            if nodes.iter().any(|n| n.live && subset(&n.bits, &bits)) {
                return None;
            }
            for n in nodes.iter_mut().filter(|n| n.live && subset(&bits, &n.bits)) {
                n.live = false;
            }
        } else if !seen.insert(config.clone()) {
            return None;
        }
        let fin = ts.holds_final(&config);
        nodes.push(Node {
            config,
            bits,
            parent,
            live: true,
        });
        queue.push_back(nodes.len() - 1);
        fin.then_some(nodes.len() - 1)
    };
    for c in initial_configs(ts) {
        if let Some(i) = insert(&mut nodes, &mut queue, c, None) {
            return ReachResult::Reachable(trace_to(&nodes, i));
        }
    }
    let mut succ = Successors::new(ts);
    while let Some(i) = queue.pop_front() {
        if !nodes[i].live {
            continue;
        }
        if nodes.len() > opts.max_configs
            || opts.time_limit.is_some_and(|t| start.elapsed() > t)
        {
            return ReachResult::BudgetExceeded {
                explored: nodes.len(),
            };
        }
        let config = nodes[i].config.clone();
        for (c, letter) in succ.minimal(&config) {
            if let Some(j) = insert(&mut nodes, &mut queue, c, Some((i, letter))) {
                return ReachResult::Reachable(trace_to(&nodes, j));
            }
        }
    }
    ReachResult::Unreachable
}

/// Minimal configurations reachable in exactly `k` steps, for
/// `k = 0..=steps`.
pub fn bounded_layers(ts: &TransSys, steps: usize) -> Vec<BTreeSet<BTreeSet<u32>>> {
    let mut succ = Successors::new(ts);
    let mut layer: BTreeSet<BTreeSet<u32>> = minimal_only(initial_configs(ts));
    let mut out = vec![layer.clone()];
    for _ in 0..steps {
        let all: Vec<BTreeSet<u32>> = layer
            .iter()
            .flat_map(|c| succ.minimal(c).into_iter().map(|(s, _)| s))
            .collect();
        layer = minimal_only(all);
        out.push(layer.clone());
    }
    out
}

/// Dense bit positions for a fixed universe of states.
struct BitIndex {
    pos: BTreeMap<u32, usize>,
}

impl BitIndex {
    fn new(universe: impl IntoIterator<Item = u32>) -> BitIndex {
        let mut pos = BTreeMap::new();
        for q in universe {
            let n = pos.len();
            pos.entry(q).or_insert(n);
        }
        BitIndex { pos }
    }

    fn bits(&self, set: &BTreeSet<u32>) -> Vec<u64> {
        let mut out = vec![0u64; self.pos.len().div_ceil(64)];
        for q in set {
            let i = self.pos[q];
            out[i / 64] |= 1 << (i % 64);
        }
        out
    }
}

fn subset(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

/// The ⊆-minimal elements of a family of sets.
pub fn minimal_only<I: IntoIterator<Item = BTreeSet<u32>>>(sets: I) -> BTreeSet<BTreeSet<u32>> {
    let all: BTreeSet<BTreeSet<u32>> = sets.into_iter().collect();
    let index = BitIndex::new(all.iter().flatten().copied());
    let mut by_size: Vec<(&BTreeSet<u32>, Vec<u64>)> = all.iter().map(|s| (s, index.bits(s))).collect();
    by_size.sort_by_key(|(s, _)| s.len());
    let mut kept: Vec<(&BTreeSet<u32>, Vec<u64>)> = Vec::new();
    for (s, b) in by_size {
        if !kept.iter().any(|(_, k)| subset(k, &b)) {
            kept.push((s, b));
        }
    }
    kept.into_iter().map(|(s, _)| s.clone()).collect()
}

/// Emptiness of an automaton without parameters.
pub fn is_empty(a: &Afa, encoding: Encoding, opts: &ReachOptions) -> ReachResult {
    check_reach(&encode(a, encoding), opts)
}

#[cfg(test)]
mod tests;
