// SPDX-License-Identifier: Apache-2.0

//! Hash-consed Boolean expressions over typed atoms.
//!
//! Every [`Expr`] node is interned in a process-wide table, so two
//! structurally identical expressions built independently share the same
//! node and compare equal by id. Children are kept in construction order;
//! `And`/`Or` are flattened and constant-folded on construction.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Weak};

use dashmap::DashMap;
use once_cell::sync::Lazy;

use super::FormulaError;

/// A propositional atom. Ids are drawn from per-kind arenas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// Automaton state `q`.
    State(u32),
    /// Input bit `bit` read on track `track` (tracks start at 1).
    Input { bit: u32, track: u32 },
    /// Epsilon bit `id` on track `track`.
    Eps { id: u32, track: u32 },
    /// Synchronisation parameter.
    Param(u32),
    /// Post-state copy `q'` of a state, used by transition systems.
    Next(u32),
    /// Auxiliary system input (branch choices, reset gadgets).
    Aux(u32),
}

impl Atom {
    pub fn is_state(&self) -> bool {
        matches!(self, Atom::State(_))
    }

    pub fn is_param(&self) -> bool {
        matches!(self, Atom::Param(_))
    }

    /// Input or epsilon bit, i.e. part of a letter.
    pub fn is_letter_bit(&self) -> bool {
        matches!(self, Atom::Input { .. } | Atom::Eps { .. })
    }

    pub fn track(&self) -> Option<u32> {
        match *self {
            Atom::Input { track, .. } | Atom::Eps { track, .. } => Some(track),
            _ => None,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Atom::State(q) => write!(f, "q{q}"),
            Atom::Input { bit, track } => write!(f, "v{bit}@{track}"),
            Atom::Eps { id, track } => write!(f, "e{id}@{track}"),
            Atom::Param(s) => write!(f, "s{s}"),
            Atom::Next(q) => write!(f, "q{q}'"),
            Atom::Aux(h) => write!(f, "h{h}"),
        }
    }
}

/// Occurrence classes of an atom inside a formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
    Both,
    Absent,
}

impl Polarity {
    fn join(self, other: Polarity) -> Polarity {
        use Polarity::*;
        match (self, other) {
            (Absent, p) | (p, Absent) => p,
            (a, b) if a == b => a,
            _ => Both,
        }
    }
}

#[derive(Debug)]
pub enum Kind {
    Const(bool),
    Atom(Atom),
    Not(Expr),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

#[derive(Debug)]
pub struct Node {
    id: u64,
    kind: Kind,
}

/// Immutable, shareable Boolean expression.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

#[derive(Clone, PartialEq, Eq, Hash)]
enum Key {
    Const(bool),
    Atom(Atom),
    Not(u64),
    And(Vec<u64>),
    Or(Vec<u64>),
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);
static INTERNER: Lazy<DashMap<Key, Weak<Node>>> = Lazy::new(DashMap::new);
static INSERTS: AtomicU64 = AtomicU64::new(0);

fn intern(key: Key, kind: Kind) -> Expr {
    if let Some(w) = INTERNER.get(&key) {
        if let Some(node) = w.upgrade() {
            return Expr(node);
        }
    }
    let mut entry = INTERNER.entry(key).or_insert_with(Weak::new);
    if let Some(node) = entry.upgrade() {
        return Expr(node);
    }
    let node = Arc::new(Node {
        id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
        kind,
    });
    *entry = Arc::downgrade(&node);
    drop(entry);
    let n = INSERTS.fetch_add(1, Ordering::Relaxed) + 1;
    if n % (1 << 17) == 0 {
        INTERNER.retain(|_, w| w.strong_count() > 0);
    }
    Expr(node)
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.0.id == other.0.id
    }
}
impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.id.hash(state)
    }
}

impl Expr {
    pub fn id(&self) -> u64 {
        self.0.id
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    pub fn constant(b: bool) -> Expr {
        intern(Key::Const(b), Kind::Const(b))
    }

    pub fn tt() -> Expr {
        Expr::constant(true)
    }

    pub fn ff() -> Expr {
        Expr::constant(false)
    }

    pub fn atom(a: Atom) -> Expr {
        intern(Key::Atom(a), Kind::Atom(a))
    }

    pub fn state(q: u32) -> Expr {
        Expr::atom(Atom::State(q))
    }

    pub fn lit(a: Atom, positive: bool) -> Expr {
        let e = Expr::atom(a);
        if positive {
            e
        } else {
            e.not()
        }
    }

    pub fn not(&self) -> Expr {
        match self.kind() {
            Kind::Const(b) => Expr::constant(!b),
            Kind::Not(inner) => inner.clone(),
            _ => intern(Key::Not(self.id()), Kind::Not(self.clone())),
        }
    }

    pub fn and<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        Expr::nary(items, true)
    }

    pub fn or<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        Expr::nary(items, false)
    }

    pub fn and2(a: &Expr, b: &Expr) -> Expr {
        Expr::and([a.clone(), b.clone()])
    }

    pub fn or2(a: &Expr, b: &Expr) -> Expr {
        Expr::or([a.clone(), b.clone()])
    }

    pub fn implies(a: &Expr, b: &Expr) -> Expr {
        Expr::or([a.not(), b.clone()])
    }

    pub fn iff(a: &Expr, b: &Expr) -> Expr {
        Expr::and([Expr::implies(a, b), Expr::implies(b, a)])
    }

    fn nary<I: IntoIterator<Item = Expr>>(items: I, conj: bool) -> Expr {
        // absorbing element for And is false, for Or is true
        let absorbing = !conj;
        let mut out: Vec<Expr> = Vec::new();
        let mut seen: HashSet<u64> = HashSet::new();
        let mut stack: Vec<Expr> = items.into_iter().collect();
        stack.reverse();
        while let Some(e) = stack.pop() {
            match e.kind() {
                Kind::Const(b) if *b == absorbing => return Expr::constant(absorbing),
                Kind::Const(_) => {}
                Kind::And(children) if conj => {
                    for c in children.iter().rev() {
                        stack.push(c.clone());
                    }
                }
                Kind::Or(children) if !conj => {
                    for c in children.iter().rev() {
                        stack.push(c.clone());
                    }
                }
                _ => {
                    if seen.insert(e.id()) {
                        out.push(e);
                    }
                }
            }
        }
        match out.len() {
            0 => Expr::constant(conj),
            1 => out.pop().unwrap(),
            _ => {
                let ids = out.iter().map(Expr::id).collect();
                if conj {
                    intern(Key::And(ids), Kind::And(out))
                } else {
                    intern(Key::Or(ids), Kind::Or(out))
                }
            }
        }
    }

    pub fn as_const(&self) -> Option<bool> {
        match self.kind() {
            Kind::Const(b) => Some(*b),
            _ => None,
        }
    }

    pub fn is_true(&self) -> bool {
        self.as_const() == Some(true)
    }

    pub fn is_false(&self) -> bool {
        self.as_const() == Some(false)
    }

    /// Operands of a top-level conjunction (the expression itself otherwise).
    pub fn conjuncts(&self) -> Vec<Expr> {
        match self.kind() {
            Kind::And(cs) => cs.clone(),
            Kind::Const(true) => Vec::new(),
            _ => vec![self.clone()],
        }
    }

    /// Operands of a top-level disjunction (the expression itself otherwise).
    pub fn disjuncts(&self) -> Vec<Expr> {
        match self.kind() {
            Kind::Or(cs) => cs.clone(),
            Kind::Const(false) => Vec::new(),
            _ => vec![self.clone()],
        }
    }

    /// Standard evaluation. Fails on the first atom missing from `asg`.
    pub fn evaluate(&self, asg: &Assignment) -> Result<bool, FormulaError> {
        match self.kind() {
            Kind::Const(b) => Ok(*b),
            Kind::Atom(a) => asg.get(*a).ok_or(FormulaError::MissingAtom(*a)),
            Kind::Not(e) => Ok(!e.evaluate(asg)?),
            Kind::And(cs) => {
                for c in cs {
                    if !c.evaluate(asg)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Kind::Or(cs) => {
                for c in cs {
                    if c.evaluate(asg)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }

    /// Evaluation where every atom outside `asg` reads as false.
    pub fn evaluate_default(&self, asg: &Assignment) -> bool {
        match self.kind() {
            Kind::Const(b) => *b,
            Kind::Atom(a) => asg.get(*a).unwrap_or(false),
            Kind::Not(e) => !e.evaluate_default(asg),
            Kind::And(cs) => cs.iter().all(|c| c.evaluate_default(asg)),
            Kind::Or(cs) => cs.iter().any(|c| c.evaluate_default(asg)),
        }
    }

    /// Evaluation against a predicate on atoms.
    pub fn evaluate_with<F: Fn(Atom) -> bool + Copy>(&self, val: F) -> bool {
        match self.kind() {
            Kind::Const(b) => *b,
            Kind::Atom(a) => val(*a),
            Kind::Not(e) => !e.evaluate_with(val),
            Kind::And(cs) => cs.iter().all(|c| c.evaluate_with(val)),
            Kind::Or(cs) => cs.iter().any(|c| c.evaluate_with(val)),
        }
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        let mut seen = HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.id()) {
                continue;
            }
            match e.kind() {
                Kind::Const(_) => {}
                Kind::Atom(a) => {
                    out.insert(*a);
                }
                Kind::Not(c) => stack.push(c.clone()),
                Kind::And(cs) | Kind::Or(cs) => stack.extend(cs.iter().cloned()),
            }
        }
        out
    }

    /// Polarity of every atom occurring in the expression.
    pub fn polarities(&self) -> BTreeMap<Atom, Polarity> {
        let mut out: BTreeMap<Atom, Polarity> = BTreeMap::new();
        let mut seen: HashSet<(u64, bool)> = HashSet::new();
        let mut stack = vec![(self.clone(), true)];
        while let Some((e, pos)) = stack.pop() {
            if !seen.insert((e.id(), pos)) {
                continue;
            }
            match e.kind() {
                Kind::Const(_) => {}
                Kind::Atom(a) => {
                    let p = if pos {
                        Polarity::Positive
                    } else {
                        Polarity::Negative
                    };
                    let slot = out.entry(*a).or_insert(Polarity::Absent);
                    *slot = slot.join(p);
                }
                Kind::Not(c) => stack.push((c.clone(), !pos)),
                Kind::And(cs) | Kind::Or(cs) => {
                    stack.extend(cs.iter().map(|c| (c.clone(), pos)));
                }
            }
        }
        out
    }

    pub fn polarity(&self, atom: Atom) -> Polarity {
        self.polarities()
            .get(&atom)
            .copied()
            .unwrap_or(Polarity::Absent)
    }

    /// True when no atom selected by `pred` occurs under an odd number of negations.
    pub fn is_positive_on<P: Fn(&Atom) -> bool>(&self, pred: P) -> bool {
        self.polarities()
            .iter()
            .filter(|(a, _)| pred(a))
            .all(|(_, p)| matches!(p, Polarity::Positive))
    }

    pub fn is_negative_on<P: Fn(&Atom) -> bool>(&self, pred: P) -> bool {
        self.polarities()
            .iter()
            .filter(|(a, _)| pred(a))
            .all(|(_, p)| matches!(p, Polarity::Negative))
    }

    /// Negation normal form: negations only directly above atoms.
    pub fn nnf(&self) -> Expr {
        let mut memo = HashMap::new();
        self.nnf_rec(true, &mut memo)
    }

    fn nnf_rec(&self, pos: bool, memo: &mut HashMap<(u64, bool), Expr>) -> Expr {
        if let Some(e) = memo.get(&(self.id(), pos)) {
            return e.clone();
        }
        let out = match self.kind() {
            Kind::Const(b) => Expr::constant(*b == pos),
            Kind::Atom(a) => Expr::lit(*a, pos),
            Kind::Not(c) => c.nnf_rec(!pos, memo),
            Kind::And(cs) => {
                let parts: Vec<Expr> = cs.iter().map(|c| c.nnf_rec(pos, memo)).collect();
                if pos {
                    Expr::and(parts)
                } else {
                    Expr::or(parts)
                }
            }
            Kind::Or(cs) => {
                let parts: Vec<Expr> = cs.iter().map(|c| c.nnf_rec(pos, memo)).collect();
                if pos {
                    Expr::or(parts)
                } else {
                    Expr::and(parts)
                }
            }
        };
        memo.insert((self.id(), pos), out.clone());
        out
    }

    pub fn is_nnf(&self) -> bool {
        match self.kind() {
            Kind::Const(_) | Kind::Atom(_) => true,
            Kind::Not(c) => matches!(c.kind(), Kind::Atom(_)),
            Kind::And(cs) | Kind::Or(cs) => cs.iter().all(Expr::is_nnf),
        }
    }

    /// The polarity dual: conjunction and disjunction swapped, constants
    /// swapped, literals untouched. Input is brought to NNF first.
    pub fn polarity_dual(&self) -> Expr {
        fn go(e: &Expr, memo: &mut HashMap<u64, Expr>) -> Expr {
            if let Some(r) = memo.get(&e.id()) {
                return r.clone();
            }
            let out = match e.kind() {
                Kind::Const(b) => Expr::constant(!b),
                Kind::Atom(_) | Kind::Not(_) => e.clone(),
                Kind::And(cs) => Expr::or(cs.iter().map(|c| go(c, memo)).collect::<Vec<_>>()),
                Kind::Or(cs) => Expr::and(cs.iter().map(|c| go(c, memo)).collect::<Vec<_>>()),
            };
            memo.insert(e.id(), out.clone());
            out
        }
        go(&self.nnf(), &mut HashMap::new())
    }

    /// Simultaneous substitution of atoms by expressions.
    pub fn substitute(&self, map: &HashMap<Atom, Expr>) -> Expr {
        if map.is_empty() {
            return self.clone();
        }
        let mut memo = HashMap::new();
        self.subst_rec(&|a| map.get(&a).cloned(), &mut memo)
    }

    /// Substitution driven by a function; atoms mapped to `None` stay.
    pub fn substitute_with<F: Fn(Atom) -> Option<Expr>>(&self, f: F) -> Expr {
        let mut memo = HashMap::new();
        self.subst_rec(&f, &mut memo)
    }

    fn subst_rec<F: Fn(Atom) -> Option<Expr>>(&self, f: &F, memo: &mut HashMap<u64, Expr>) -> Expr {
        if let Some(r) = memo.get(&self.id()) {
            return r.clone();
        }
        let out = match self.kind() {
            Kind::Const(_) => self.clone(),
            Kind::Atom(a) => f(*a).unwrap_or_else(|| self.clone()),
            Kind::Not(c) => c.subst_rec(f, memo).not(),
            Kind::And(cs) => Expr::and(cs.iter().map(|c| c.subst_rec(f, memo)).collect::<Vec<_>>()),
            Kind::Or(cs) => Expr::or(cs.iter().map(|c| c.subst_rec(f, memo)).collect::<Vec<_>>()),
        };
        memo.insert(self.id(), out.clone());
        out
    }

    /// Renames atoms one-to-one.
    pub fn rename<F: Fn(Atom) -> Atom>(&self, f: F) -> Expr {
        self.substitute_with(|a| {
            let b = f(a);
            (b != a).then(|| Expr::atom(b))
        })
    }

    /// Fixes the given atoms to constants and folds.
    pub fn restrict(&self, asg: &Assignment) -> Expr {
        self.substitute_with(|a| asg.get(a).map(Expr::constant))
    }

    /// Number of distinct nodes in the DAG.
    pub fn dag_size(&self) -> usize {
        let mut seen = HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.id()) {
                continue;
            }
            match e.kind() {
                Kind::Not(c) => stack.push(c.clone()),
                Kind::And(cs) | Kind::Or(cs) => stack.extend(cs.iter().cloned()),
                _ => {}
            }
        }
        seen.len()
    }

    /// Disjunctive normal form as a list of literal sets. Exponential in general.
    pub fn dnf(&self) -> Vec<Vec<(Atom, bool)>> {
        fn go(e: &Expr) -> Vec<Vec<(Atom, bool)>> {
            match e.kind() {
                Kind::Const(true) => vec![vec![]],
                Kind::Const(false) => vec![],
                Kind::Atom(a) => vec![vec![(*a, true)]],
                Kind::Not(c) => match c.kind() {
                    Kind::Atom(a) => vec![vec![(*a, false)]],
                    _ => unreachable!("dnf expects nnf"),
                },
                Kind::Or(cs) => cs.iter().flat_map(go).collect(),
                Kind::And(cs) => {
                    let mut acc: Vec<Vec<(Atom, bool)>> = vec![vec![]];
                    for c in cs {
                        let part = go(c);
                        let mut next = Vec::new();
                        for a in &acc {
                            for p in &part {
                                if let Some(t) = merge_terms(a, p) {
                                    next.push(t);
                                }
                            }
                        }
                        acc = next;
                        if acc.is_empty() {
                            break;
                        }
                    }
                    acc
                }
            }
        }
        go(&self.nnf())
    }
}

fn merge_terms(a: &[(Atom, bool)], b: &[(Atom, bool)]) -> Option<Vec<(Atom, bool)>> {
    let mut out = a.to_vec();
    for &(atom, v) in b {
        match out.iter().find(|(x, _)| *x == atom) {
            Some((_, w)) if *w != v => return None,
            Some(_) => {}
            None => out.push((atom, v)),
        }
    }
    Some(out)
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            Kind::Const(true) => write!(f, "true"),
            Kind::Const(false) => write!(f, "false"),
            Kind::Atom(a) => write!(f, "{a}"),
            Kind::Not(c) => match c.kind() {
                Kind::Atom(_) => write!(f, "!{c}"),
                _ => write!(f, "!({c})"),
            },
            Kind::And(cs) | Kind::Or(cs) => {
                let sep = if matches!(self.kind(), Kind::And(_)) {
                    " & "
                } else {
                    " | "
                };
                write!(f, "(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{sep}")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Partial map from atoms to truth values.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    values: BTreeMap<Atom, bool>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Total assignment over `universe` where exactly `true_atoms` hold.
    pub fn from_true_set<'a, U, T>(universe: U, true_atoms: T) -> Self
    where
        U: IntoIterator<Item = &'a Atom>,
        T: IntoIterator<Item = &'a Atom>,
    {
        let mut values: BTreeMap<Atom, bool> = universe.into_iter().map(|a| (*a, false)).collect();
        for a in true_atoms {
            values.insert(*a, true);
        }
        Assignment { values }
    }

    pub fn set(&mut self, a: Atom, v: bool) -> &mut Self {
        self.values.insert(a, v);
        self
    }

    pub fn with(mut self, a: Atom, v: bool) -> Self {
        self.values.insert(a, v);
        self
    }

    pub fn get(&self, a: Atom) -> Option<bool> {
        self.values.get(&a).copied()
    }

    pub fn remove(&mut self, a: Atom) -> Option<bool> {
        self.values.remove(&a)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Atom, bool)> + '_ {
        self.values.iter().map(|(a, v)| (*a, *v))
    }

    pub fn true_atoms(&self) -> impl Iterator<Item = Atom> + '_ {
        self.values.iter().filter(|(_, v)| **v).map(|(a, _)| *a)
    }

    pub fn extend(&mut self, other: &Assignment) {
        for (a, v) in other.iter() {
            self.values.insert(a, v);
        }
    }

    /// Restriction to atoms satisfying `pred`.
    pub fn project<P: Fn(&Atom) -> bool>(&self, pred: P) -> Assignment {
        Assignment {
            values: self
                .values
                .iter()
                .filter(|(a, _)| pred(a))
                .map(|(a, v)| (*a, *v))
                .collect(),
        }
    }
}

impl FromIterator<(Atom, bool)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (Atom, bool)>>(iter: I) -> Self {
        Assignment {
            values: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.true_atoms().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}
