// SPDX-License-Identifier: Apache-2.0

//! Succinct alternating finite automata over bit-vector letters.
//!
//! An automaton is `(V, Q, Δ, I, F)`: every `Δ(q)` is a formula over input
//! bits and states that is positive on states, `I` is positive on states and
//! `F` is negative on states. A run is a sequence of state sets `α0 b1 α1 …`
//! with `b_i ∪ α_i ⊨ ⋀_{q∈α_{i-1}} Δ(q)`.

mod complement;
mod regex;
mod step;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::atomic::{AtomicU32, Ordering};

use thiserror::Error;

use crate::formula::{enum_models, Assignment, Atom, Expr};

pub use regex::{
    afa_from_regex, char_class_formula, complement_ranges, normalize_ranges, parse_regex, Regex,
    MAX_BITS,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomataError {
    #[error("transition of state q{state} is not positive on states")]
    NonPositiveTransition { state: u32 },
    #[error("initial formula is not positive on states")]
    NonPositiveInit,
    #[error("final formula is not negative on states")]
    NonNegativeFinal,
    #[error("atom {0} is not allowed here")]
    UnexpectedAtom(Atom),
    #[error("state q{0} has no transition")]
    MissingTransition(u32),
    #[error("letter does not match the automaton alphabet at atom {0}")]
    AlphabetMismatch(Atom),
    #[error("regex parse error at offset {offset}: {msg}")]
    RegexParse { offset: usize, msg: String },
}

static NEXT_STATE: AtomicU32 = AtomicU32::new(1 << 24);

/// A state id never handed out before. Hand-written automata use small ids;
/// the arena starts high so that the two never meet.
pub fn fresh_state() -> u32 {
    NEXT_STATE.fetch_add(1, Ordering::Relaxed)
}

#[derive(Clone, Debug)]
pub struct Afa {
    vars: BTreeSet<Atom>,
    delta: BTreeMap<u32, Expr>,
    init: Expr,
    fin: Expr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CombineKind {
    Union,
    Intersection,
}

fn state_atoms(e: &Expr) -> impl Iterator<Item = u32> {
    e.atoms().into_iter().filter_map(|a| match a {
        Atom::State(q) => Some(q),
        _ => None,
    })
}

impl Afa {
    /// Builds an automaton after checking the polarity invariants. `vars`
    /// are the letter atoms (input and ε bits); parameters may occur in
    /// `init` and `fin` only.
    pub fn new(
        vars: BTreeSet<Atom>,
        delta: BTreeMap<u32, Expr>,
        init: Expr,
        fin: Expr,
    ) -> Result<Afa, AutomataError> {
        if let Some(a) = vars.iter().find(|a| !a.is_letter_bit()) {
            return Err(AutomataError::UnexpectedAtom(*a));
        }
        for (q, d) in &delta {
            for a in d.atoms() {
                match a {
                    Atom::State(p) if !delta.contains_key(&p) => {
                        return Err(AutomataError::MissingTransition(p))
                    }
                    Atom::State(_) => {}
                    a if a.is_letter_bit() && vars.contains(&a) => {}
                    a => return Err(AutomataError::UnexpectedAtom(a)),
                }
            }
            if !d.is_positive_on(Atom::is_state) {
                return Err(AutomataError::NonPositiveTransition { state: *q });
            }
        }
        for e in [&init, &fin] {
            for a in e.atoms() {
                match a {
                    Atom::State(p) if !delta.contains_key(&p) => {
                        return Err(AutomataError::MissingTransition(p))
                    }
                    Atom::State(_) | Atom::Param(_) => {}
                    a => return Err(AutomataError::UnexpectedAtom(a)),
                }
            }
        }
        if !init.is_positive_on(Atom::is_state) {
            return Err(AutomataError::NonPositiveInit);
        }
        if !fin.is_negative_on(Atom::is_state) {
            return Err(AutomataError::NonNegativeFinal);
        }
        Ok(Afa {
            vars,
            delta,
            init,
            fin,
        })
    }

    /// Single state looping on every letter; accepts everything.
    pub fn universal(vars: BTreeSet<Atom>) -> Afa {
        let q = fresh_state();
        let mut delta = BTreeMap::new();
        delta.insert(q, Expr::state(q));
        Afa::new(vars, delta, Expr::state(q), Expr::tt()).expect("universal automaton")
    }

    pub fn empty(vars: BTreeSet<Atom>) -> Afa {
        Afa::new(vars, BTreeMap::new(), Expr::ff(), Expr::tt()).expect("empty automaton")
    }

    pub fn vars(&self) -> &BTreeSet<Atom> {
        &self.vars
    }

    pub fn states(&self) -> impl Iterator<Item = u32> + '_ {
        self.delta.keys().copied()
    }

    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn delta(&self) -> &BTreeMap<u32, Expr> {
        &self.delta
    }

    pub fn transition(&self, q: u32) -> &Expr {
        &self.delta[&q]
    }

    pub fn init(&self) -> &Expr {
        &self.init
    }

    pub fn final_formula(&self) -> &Expr {
        &self.fin
    }

    pub fn params(&self) -> BTreeSet<u32> {
        self.init
            .atoms()
            .into_iter()
            .chain(self.fin.atoms())
            .filter_map(|a| match a {
                Atom::Param(s) => Some(s),
                _ => None,
            })
            .collect()
    }

    /// True when I, F and Δ have the NFA shape: I a disjunction of states,
    /// F a conjunction of negated states, Δ(q) a disjunction of
    /// `φ(V) ∧ q'` terms.
    pub fn is_nfa(&self) -> bool {
        let single = |e: &Expr| matches!(e.kind(), crate::formula::Kind::Atom(Atom::State(_)));
        let init_ok = self.init.is_false() || self.init.disjuncts().iter().all(single);
        let fin_ok = self.fin.conjuncts().iter().all(|c| {
            c.is_true()
                || matches!(c.kind(), crate::formula::Kind::Not(x) if single(x))
        });
        let delta_ok = self.delta.values().all(|d| {
            d.is_false()
                || d.disjuncts().iter().all(|t| {
                    state_atoms(t).count() == 1
                        && t.conjuncts().iter().filter(|c| single(c)).count() == 1
                })
        });
        init_ok && fin_ok && delta_ok
    }

    /// Applies `f` to every state id.
    pub fn rename_states<F: Fn(u32) -> u32>(&self, f: F) -> Afa {
        let ren = |e: &Expr| {
            e.rename(|a| match a {
                Atom::State(q) => Atom::State(f(q)),
                o => o,
            })
        };
        Afa {
            vars: self.vars.clone(),
            delta: self.delta.iter().map(|(q, d)| (f(*q), ren(d))).collect(),
            init: ren(&self.init),
            fin: ren(&self.fin),
        }
    }

    /// Copy with every state replaced by a fresh one; returns the map too.
    pub fn freshen(&self) -> (Afa, BTreeMap<u32, u32>) {
        let map: BTreeMap<u32, u32> = self.delta.keys().map(|q| (*q, fresh_state())).collect();
        (self.rename_states(|q| map[&q]), map)
    }

    /// Replaces the letter atoms through `f` (used by the transducer layer
    /// for track re-indexing). The new alphabet is the image of the old one.
    pub fn map_letters<F: Fn(Atom) -> Atom>(&self, f: F) -> Afa {
        let ren = |e: &Expr| e.rename(|a| if a.is_letter_bit() { f(a) } else { a });
        Afa {
            vars: self.vars.iter().map(|a| f(*a)).collect(),
            delta: self.delta.iter().map(|(q, d)| (*q, ren(d))).collect(),
            init: self.init.clone(),
            fin: self.fin.clone(),
        }
    }

    pub fn with_vars(&self, extra: &BTreeSet<Atom>) -> Afa {
        let mut out = self.clone();
        out.vars.extend(extra.iter().copied());
        out
    }

    pub(crate) fn from_parts_unchecked(
        vars: BTreeSet<Atom>,
        delta: BTreeMap<u32, Expr>,
        init: Expr,
        fin: Expr,
    ) -> Afa {
        let a = Afa {
            vars,
            delta,
            init,
            fin,
        };
        debug_assert!(a.check().is_ok(), "{:?}", a.check());
        a
    }

    /// Re-runs the constructor checks.
    pub fn check(&self) -> Result<(), AutomataError> {
        Afa::new(
            self.vars.clone(),
            self.delta.clone(),
            self.init.clone(),
            self.fin.clone(),
        )
        .map(|_| ())
    }

    fn check_letter(&self, letter: &Assignment) -> Result<(), AutomataError> {
        for (a, _) in letter.iter() {
            if !self.vars.contains(&a) {
                return Err(AutomataError::AlphabetMismatch(a));
            }
        }
        for a in &self.vars {
            if letter.get(*a).is_none() {
                return Err(AutomataError::AlphabetMismatch(*a));
            }
        }
        Ok(())
    }

    fn state_list(&self) -> Vec<Atom> {
        self.delta.keys().map(|q| Atom::State(*q)).collect()
    }

    /// Decides membership by a forward search over ⊆-minimal configurations.
    pub fn accepts(&self, word: &[Assignment]) -> Result<bool, AutomataError> {
        self.search(word, true)
    }

    /// Same as [`Afa::accepts`] but keeps every successor configuration;
    /// a reference mode for checking that minimal successors suffice.
    pub fn accepts_unpruned(&self, word: &[Assignment]) -> Result<bool, AutomataError> {
        self.search(word, false)
    }

    fn search(&self, word: &[Assignment], minimal: bool) -> Result<bool, AutomataError> {
        for l in word {
            self.check_letter(l)?;
        }
        let mut stepper = Stepper::new(self);
        let params: Vec<u32> = self.params().into_iter().collect();
        // acceptance quantifies over parameter assignments
        for mask in 0u64..(1u64 << params.len()) {
            let pa: Assignment = params
                .iter()
                .enumerate()
                .map(|(i, s)| (Atom::Param(*s), mask >> i & 1 == 1))
                .collect();
            if self.search_fixed(&mut stepper, &pa, word, minimal) {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn search_fixed(
        &self,
        stepper: &mut Stepper,
        pa: &Assignment,
        word: &[Assignment],
        minimal: bool,
    ) -> bool {
        let states = self.state_list();
        let fin = self.fin.restrict(pa);
        let mut frontier: HashSet<BTreeSet<u32>> =
            enum_models(&self.init.restrict(pa), &states, minimal.then_some(&states[..]))
                .map(|m| config_of(&m))
                .collect();
        for letter in word {
            let lits: Vec<(Atom, bool)> = letter.iter().collect();
            let mut next: HashSet<BTreeSet<u32>> = HashSet::new();
            for config in &frontier {
                next.extend(stepper.successors(config, &lits, minimal));
            }
            if minimal {
                next = minimize(next);
            }
            if next.is_empty() {
                return false;
            }
            frontier = next;
        }
        frontier.iter().any(|c| {
            fin.evaluate_with(|a| match a {
                Atom::State(q) => c.contains(&q),
                _ => false,
            })
        })
    }

    /// Evaluates F on a configuration (states outside it are inactive).
    pub fn final_holds(&self, config: &BTreeSet<u32>) -> bool {
        self.fin.evaluate_with(|a| match a {
            Atom::State(q) => config.contains(&q),
            _ => false,
        })
    }

    pub fn init_holds(&self, config: &BTreeSet<u32>) -> bool {
        self.init.evaluate_with(|a| match a {
            Atom::State(q) => config.contains(&q),
            _ => false,
        })
    }
}

/// The set of true state atoms of a model.
pub fn config_of(m: &Assignment) -> BTreeSet<u32> {
    m.true_atoms()
        .filter_map(|a| match a {
            Atom::State(q) => Some(q),
            _ => None,
        })
        .collect()
}

/// The ⊆-minimal state sets satisfying `e`, a formula over the states of `a`.
pub fn minimal_configs(e: &Expr, a: &Afa) -> Vec<BTreeSet<u32>> {
    let states = a.state_list();
    enum_models(e, &states, Some(&states))
        .map(|m| config_of(&m))
        .collect()
}

/// Keeps the ⊆-minimal members.
pub fn minimize(set: HashSet<BTreeSet<u32>>) -> HashSet<BTreeSet<u32>> {
    let all: Vec<BTreeSet<u32>> = set.into_iter().collect();
    all.iter()
        .filter(|c| !all.iter().any(|o| o != *c && o.is_subset(c)))
        .cloned()
        .collect()
}

/// Union or intersection; the state sets are made disjoint first by
/// renaming the second operand when they overlap.
pub fn combine(a1: &Afa, a2: &Afa, kind: CombineKind) -> Afa {
    let overlap = a2.delta.keys().any(|q| a1.delta.contains_key(q));
    let a2 = if overlap { a2.freshen().0 } else { a2.clone() };
    let mut vars = a1.vars.clone();
    vars.extend(a2.vars.iter().copied());
    let mut delta = a1.delta.clone();
    delta.extend(a2.delta.iter().map(|(q, d)| (*q, d.clone())));
    let plain_union = empty_config_final(&a1.fin) && empty_config_final(&a2.fin);
    let (init, fin) = match kind {
        CombineKind::Intersection => (
            Expr::and2(&a1.init, &a2.init),
            Expr::and2(&a1.fin, &a2.fin),
        ),
        CombineKind::Union if plain_union => {
            (Expr::or2(&a1.init, &a2.init), Expr::and2(&a1.fin, &a2.fin))
        }
        // A side whose final formula can fail on ∅ must not veto the other.
        // Each side gets a marker state that stays active along its runs.
        CombineKind::Union => {
            let (m1, m2) = (fresh_state(), fresh_state());
            delta.insert(m1, Expr::state(m1));
            delta.insert(m2, Expr::state(m2));
            let (s1, s2) = (Expr::state(m1), Expr::state(m2));
            (
                Expr::or2(&Expr::and2(&a1.init, &s1), &Expr::and2(&a2.init, &s2)),
                Expr::or2(&Expr::and2(&a1.fin, &s2.not()), &Expr::and2(&a2.fin, &s1.not())),
            )
        }
    };
    Afa::from_parts_unchecked(vars, delta, init, fin)
}

// F holds on the empty configuration under every parameter assignment.
fn empty_config_final(fin: &Expr) -> bool {
    let at_empty = fin.substitute_with(|a| a.is_state().then(Expr::ff));
    !crate::formula::is_sat(&at_empty.not())
}

pub use complement::complement;
pub use step::Stepper;

/// Bits `v_0 … v_{k-1}` on `track`.
pub fn input_bits(bits: u32, track: u32) -> BTreeSet<Atom> {
    (0..bits).map(|bit| Atom::Input { bit, track }).collect()
}

/// The letter encoding character `code` on track 1.
pub fn letter(code: u32, bits: u32) -> Assignment {
    (0..bits)
        .map(|bit| (Atom::Input { bit, track: 1 }, code >> bit & 1 == 1))
        .collect()
}

pub fn word(codes: &[u32], bits: u32) -> Vec<Assignment> {
    codes.iter().map(|c| letter(*c, bits)).collect()
}

/// Formula recognising exactly character `code` on `track`.
pub fn char_formula(code: u32, bits: u32, track: u32) -> Expr {
    Expr::and((0..bits).map(|bit| Expr::lit(Atom::Input { bit, track }, code >> bit & 1 == 1)))
}

#[cfg(test)]
mod tests;
