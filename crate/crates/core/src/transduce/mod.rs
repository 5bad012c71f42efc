// SPDX-License-Identifier: Apache-2.0

//! k-track alternating transducers.
//!
//! A letter of a k-track transducer stacks k bit vectors. Track `i` carries
//! the character bits `v_b^i` and the ε-bits `e^i`; at a step where any
//! ε-bit of a track is set, that track reads nothing. A tuple of words is
//! recognised when some accepted letter sequence compacts to it track by
//! track.
//!
//! Tracks outside [`Aft::active_tracks`] are unconstrained: the relation is
//! a cylinder over them.

mod build;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::atomic::{AtomicU32, Ordering};

use thiserror::Error;

use crate::automata::{
    char_formula, combine, minimal_configs, minimize, Afa, AutomataError,
    CombineKind, Stepper,
};
use crate::formula::{Assignment, Atom, Expr};

pub use build::{
    equation_to_aft, length_to_aft, regular_to_rational, replace_transducer, LengthSpec,
    LinearSet,
};

pub type Var = String;

/// A word as a sequence of character codes.
pub type Word = Vec<u32>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransduceError {
    #[error("no conclusion within {steps} padded steps")]
    BudgetExceeded { steps: usize },
    #[error("variable {0} not found in the target vector")]
    VarNotFound(Var),
    #[error("epsilon bit e{0} is used by both transducers")]
    EpsCollision(u32),
    #[error("conjunction shares more than one variable: {0:?}")]
    SharedVarLimit(Vec<Var>),
    #[error("variable {0} occurs twice")]
    RepeatedVar(Var),
    #[error("empty pattern")]
    EmptyPattern,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("expected {expected} tracks, got {got}")]
    TrackMismatch { expected: usize, got: usize },
    #[error("character {code} does not fit in {bits} bits")]
    CharOutOfRange { code: u32, bits: u32 },
    #[error("missing value for parameter s{0}")]
    MissingParam(u32),
    #[error(transparent)]
    Automata(#[from] AutomataError),
}

static NEXT_EPS: AtomicU32 = AtomicU32::new(1 << 24);

/// An ε-bit id never handed out before.
pub fn fresh_eps() -> u32 {
    NEXT_EPS.fetch_add(1, Ordering::Relaxed)
}

/// Every letter atom of `tracks` tracks with `bits` character bits and the
/// given ε-bits.
pub fn alphabet(tracks: u32, bits: u32, eps: &BTreeSet<u32>) -> BTreeSet<Atom> {
    let mut out = BTreeSet::new();
    for track in 1..=tracks {
        out.extend((0..bits).map(|bit| Atom::Input { bit, track }));
        out.extend(eps.iter().map(|id| Atom::Eps { id: *id, track }));
    }
    out
}

/// Track `track` reads a character.
pub fn data(track: u32, eps: &BTreeSet<u32>) -> Expr {
    Expr::and(eps.iter().map(|id| Expr::atom(Atom::Eps { id: *id, track }).not()))
}

/// Track `track` reads nothing.
pub fn eps_on(track: u32, eps: &BTreeSet<u32>) -> Expr {
    Expr::or(eps.iter().map(|id| Expr::atom(Atom::Eps { id: *id, track })))
}

/// Character bits of two tracks agree.
pub fn same_char(t1: u32, t2: u32, bits: u32) -> Expr {
    Expr::and((0..bits).map(|bit| {
        Expr::iff(
            &Expr::atom(Atom::Input { bit, track: t1 }),
            &Expr::atom(Atom::Input { bit, track: t2 }),
        )
    }))
}

/// Track `track` reads exactly character `code`.
pub fn reads(code: u32, bits: u32, track: u32, eps: &BTreeSet<u32>) -> Expr {
    Expr::and2(&data(track, eps), &char_formula(code, bits, track))
}

#[derive(Clone, Debug)]
pub struct Aft {
    base: Afa,
    tracks: u32,
    bits: u32,
    eps_ids: BTreeSet<u32>,
    active: BTreeSet<u32>,
}

impl Aft {
    /// Wraps an automaton over track-indexed letters. The alphabet of the
    /// result is always the full one for `tracks`, `bits` and `eps_ids`.
    pub fn new(
        base: Afa,
        tracks: u32,
        bits: u32,
        eps_ids: BTreeSet<u32>,
        active: BTreeSet<u32>,
    ) -> Result<Aft, TransduceError> {
        assert!(tracks >= 1, "a transducer has at least one track");
        if let Some(t) = active.iter().find(|t| **t == 0 || **t > tracks) {
            return Err(TransduceError::TrackMismatch {
                expected: tracks as usize,
                got: *t as usize,
            });
        }
        let vars = alphabet(tracks, bits, &eps_ids);
        let base = Afa::new(
            vars,
            base.delta().clone(),
            base.init().clone(),
            base.final_formula().clone(),
        )?;
        Ok(Aft {
            base,
            tracks,
            bits,
            eps_ids,
            active,
        })
    }

    /// One-track transducer with the language of `a`, which must read
    /// track 1. It gets an idle ε-bit (see [`with_idle_bit`]).
    pub fn from_afa(a: &Afa, bits: u32) -> Result<Aft, TransduceError> {
        with_idle_bit(&Aft::new(a.clone(), 1, bits, BTreeSet::new(), [1].into())?)
    }

    pub fn base(&self) -> &Afa {
        &self.base
    }

    pub fn tracks(&self) -> u32 {
        self.tracks
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn eps_ids(&self) -> &BTreeSet<u32> {
        &self.eps_ids
    }

    pub fn active_tracks(&self) -> &BTreeSet<u32> {
        &self.active
    }

    pub fn params(&self) -> BTreeSet<u32> {
        self.base.params()
    }

    pub fn num_states(&self) -> usize {
        self.base.num_states()
    }

    fn with_base(&self, base: Afa) -> Aft {
        Aft {
            base,
            ..self.clone()
        }
    }

    /// Copy with fresh states and fresh ε-bits.
    pub fn freshen(&self) -> Aft {
        let (base, _) = self.base.freshen();
        let map: BTreeMap<u32, u32> = self.eps_ids.iter().map(|e| (*e, fresh_eps())).collect();
        let base = base.map_letters(|a| match a {
            Atom::Eps { id, track } => Atom::Eps {
                id: map[&id],
                track,
            },
            o => o,
        });
        Aft {
            base,
            eps_ids: map.values().copied().collect(),
            ..self.clone()
        }
    }

    /// Replaces the initial and final formulas (parameters may occur in both).
    pub fn with_init_final(&self, init: Expr, fin: Expr) -> Result<Aft, TransduceError> {
        let base = Afa::new(self.base.vars().clone(), self.base.delta().clone(), init, fin)?;
        Ok(self.with_base(base))
    }

    /// Compacts a letter sequence into the words it encodes, one per track.
    /// Unset character bits read as zero.
    pub fn compact(&self, letters: &[Assignment]) -> Vec<Word> {
        let mut out = vec![Vec::new(); self.tracks as usize];
        for l in letters {
            for track in 1..=self.tracks {
                let is_eps = self
                    .eps_ids
                    .iter()
                    .any(|id| l.get(Atom::Eps { id: *id, track }) == Some(true));
                if !is_eps {
                    let code = (0..self.bits)
                        .filter(|bit| l.get(Atom::Input { bit: *bit, track }) == Some(true))
                        .fold(0u32, |c, bit| c | 1 << bit);
                    out[track as usize - 1].push(code);
                }
            }
        }
        out
    }
}

fn check_distinct(vars: &[Var]) -> Result<(), TransduceError> {
    let mut seen = HashSet::new();
    for v in vars {
        if !seen.insert(v) {
            return Err(TransduceError::RepeatedVar(v.clone()));
        }
    }
    Ok(())
}

/// Moves track `i` to the position of `own[i]` in `target`.
pub fn align_tracks(t: &Aft, own: &[Var], target: &[Var]) -> Result<Aft, TransduceError> {
    if own.len() != t.tracks as usize {
        return Err(TransduceError::TrackMismatch {
            expected: t.tracks as usize,
            got: own.len(),
        });
    }
    check_distinct(own)?;
    check_distinct(target)?;
    let mut pos = Vec::with_capacity(own.len());
    for v in own {
        let p = target
            .iter()
            .position(|w| w == v)
            .ok_or_else(|| TransduceError::VarNotFound(v.clone()))?;
        pos.push(p as u32 + 1);
    }
    let remap = |track: u32| pos[track as usize - 1];
    let base = t.base.map_letters(|a| match a {
        Atom::Input { bit, track } => Atom::Input {
            bit,
            track: remap(track),
        },
        Atom::Eps { id, track } => Atom::Eps {
            id,
            track: remap(track),
        },
        o => o,
    });
    let active = t.active.iter().map(|tr| remap(*tr)).collect();
    Aft::new(base, target.len() as u32, t.bits, t.eps_ids.clone(), active)
}

fn check_disjoint(own: &BTreeSet<u32>, foreign: &BTreeSet<u32>) -> Result<(), TransduceError> {
    match own.intersection(foreign).next() {
        Some(e) => Err(TransduceError::EpsCollision(*e)),
        None => Ok(()),
    }
}

// Own transitions must not see a foreign ε-bit on an active track: such a
// track is ε in the combined reading, while the transition would take the
// character bits at face value.
fn guarded_delta(t: &Aft, foreign: &BTreeSet<u32>) -> BTreeMap<u32, Expr> {
    let guard = Expr::and(t.active.iter().flat_map(|track| {
        foreign
            .iter()
            .map(move |id| Expr::atom(Atom::Eps { id: *id, track: *track }).not())
    }));
    t.base
        .delta()
        .iter()
        .map(|(q, d)| (*q, Expr::and2(d, &guard)))
        .collect()
}

fn rebuild(
    t: &Aft,
    delta: BTreeMap<u32, Expr>,
    foreign: &BTreeSet<u32>,
) -> Result<Aft, TransduceError> {
    let eps: BTreeSet<u32> = t.eps_ids.union(foreign).copied().collect();
    let base = Afa::new(
        alphabet(t.tracks, t.bits, &eps),
        delta,
        t.base.init().clone(),
        t.base.final_formula().clone(),
    )?;
    Aft::new(base, t.tracks, t.bits, eps, t.active.clone())
}

/// Adopts foreign ε-bits without idling: the original transitions only
/// fire on letters where no foreign ε-bit is set on an active track.
pub fn guard_eps(t: &Aft, foreign: &BTreeSet<u32>) -> Result<Aft, TransduceError> {
    check_disjoint(&t.eps_ids, foreign)?;
    rebuild(t, guarded_delta(t, foreign), foreign)
}

/// A transducer without ε-bits gets a fresh one that its own transitions
/// never set; partners can idle on it.
pub fn with_idle_bit(t: &Aft) -> Result<Aft, TransduceError> {
    if !t.eps_ids.is_empty() {
        return Ok(t.clone());
    }
    let f = fresh_eps();
    let guarded = guarded_delta(t, &[f].into());
    rebuild(t, guarded, &[f].into())
}

/// Adds to every state a self-loop taken when a foreign ε-bit is set on
/// all active tracks.
pub fn saturate_eps(t: &Aft, foreign: &BTreeSet<u32>) -> Result<Aft, TransduceError> {
    check_disjoint(&t.eps_ids, foreign)?;
    let idle = Expr::or(foreign.iter().map(|id| {
        Expr::and(
            t.active
                .iter()
                .map(|track| Expr::atom(Atom::Eps { id: *id, track: *track })),
        )
    }));
    let delta = guarded_delta(t, foreign)
        .into_iter()
        .map(|(q, d)| {
            let looped = Expr::and2(&Expr::state(q), &idle);
            (q, Expr::or2(&d, &looped))
        })
        .collect();
    rebuild(t, delta, foreign)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Junction {
    And,
    Or,
}

/// Boolean combination of `t1(x̄)` and `t2(ȳ)` over the merged vector `z̄`
/// (x̄ followed by the new variables of ȳ).
pub fn aft_combine(
    t1: &Aft,
    x: &[Var],
    t2: &Aft,
    y: &[Var],
    kind: Junction,
) -> Result<(Aft, Vec<Var>), TransduceError> {
    let shared: Vec<Var> = y.iter().filter(|v| x.contains(v)).cloned().collect();
    if kind == Junction::And && shared.len() > 1 {
        return Err(TransduceError::SharedVarLimit(shared));
    }
    check_disjoint(&t1.eps_ids, &t2.eps_ids)?;
    assert_eq!(t1.bits, t2.bits, "transducers over different alphabets");
    let mut z: Vec<Var> = x.to_vec();
    z.extend(y.iter().filter(|v| !x.contains(v)).cloned());
    let a1 = align_tracks(&with_idle_bit(t1)?, x, &z)?;
    let a2 = align_tracks(&with_idle_bit(t2)?, y, &z)?;
    // both junctions need each side to idle while the other one reads
    // tracks it does not constrain
    let ck = match kind {
        Junction::And => CombineKind::Intersection,
        Junction::Or => CombineKind::Union,
    };
    let b1 = saturate_eps(&a1, &a2.eps_ids)?;
    let b2 = saturate_eps(&a2, &a1.eps_ids)?;
    let base = combine(&b1.base, &b2.base, ck);
    let eps = b1.eps_ids.clone();
    let active = a1.active.union(&a2.active).copied().collect();
    Ok((Aft::new(base, z.len() as u32, t1.bits, eps, active)?, z))
}

/// Default padding budget for [`recognizes`]: the number of distinct
/// (positions, configuration) nodes, beyond which the search cannot find
/// anything new. Capped at 2^20 layers.
pub fn default_budget(t: &Aft, tup: &[Word]) -> usize {
    let positions = t
        .active
        .iter()
        .map(|tr| tup[*tr as usize - 1].len() + 1)
        .fold(1usize, |a, b| a.saturating_mul(b));
    let configs = 1usize << t.num_states().min(20);
    positions.saturating_mul(configs).min(1 << 20)
}

/// Bounded decision of tuple membership for a fixed parameter assignment.
///
/// Explores (read positions, minimal configuration) pairs breadth-first;
/// each step lets every active track either read its next character or
/// be ε. The search is exact when it saturates before `max_steps` layers
/// and reports [`TransduceError::BudgetExceeded`] otherwise.
pub fn recognizes(
    t: &Aft,
    tup: &[Word],
    passign: &Assignment,
    max_steps: Option<usize>,
) -> Result<bool, TransduceError> {
    if tup.len() != t.tracks as usize {
        return Err(TransduceError::TrackMismatch {
            expected: t.tracks as usize,
            got: tup.len(),
        });
    }
    for s in t.params() {
        if passign.get(Atom::Param(s)).is_none() {
            return Err(TransduceError::MissingParam(s));
        }
    }
    for w in tup {
        if let Some(c) = w.iter().find(|c| t.bits < 32 && **c >> t.bits != 0) {
            return Err(TransduceError::CharOutOfRange {
                code: *c,
                bits: t.bits,
            });
        }
    }
    let budget = max_steps.unwrap_or_else(|| default_budget(t, tup));
    let active: Vec<u32> = t.active.iter().copied().collect();
    let lens: Vec<usize> = active.iter().map(|tr| tup[*tr as usize - 1].len()).collect();
    let mut stepper = Stepper::new(&t.base);
    for tr in &active {
        stepper.define(Atom::Aux(*tr), &eps_on(*tr, &t.eps_ids));
    }
    let init = t.base.init().restrict(passign);
    let fin = t.base.final_formula().restrict(passign);
    let accepting = |pos: &[usize], c: &BTreeSet<u32>| {
        pos == &lens[..]
            && fin.evaluate_with(|a| match a {
                Atom::State(q) => c.contains(&q),
                _ => false,
            })
    };
    type Node = (Vec<usize>, BTreeSet<u32>);
    let start: Vec<Node> = minimal_configs(&init, &t.base)
        .into_iter()
        .map(|c| (vec![0; active.len()], c))
        .collect();
    let mut visited: HashSet<Node> = start.iter().cloned().collect();
    let mut layer = start;
    for step in 0..=budget {
        if layer.iter().any(|(p, c)| accepting(p, c)) {
            return Ok(true);
        }
        if layer.is_empty() {
            return Ok(false);
        }
        if step == budget {
            break;
        }
        let mut grouped: BTreeMap<Vec<usize>, HashSet<BTreeSet<u32>>> = BTreeMap::new();
        for (pos, config) in &layer {
            for mask in 0u32..1 << active.len() {
                let mut lits = Vec::new();
                let mut npos = pos.clone();
                let mut ok = true;
                for (i, tr) in active.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        if t.eps_ids.is_empty() {
                            ok = false;
                            break;
                        }
                        lits.push((Atom::Aux(*tr), true));
                    } else {
                        let Some(c) = tup[*tr as usize - 1].get(pos[i]) else {
                            ok = false;
                            break;
                        };
                        npos[i] += 1;
                        lits.extend(
                            (0..t.bits).map(|bit| (Atom::Input { bit, track: *tr }, c >> bit & 1 == 1)),
                        );
                        lits.extend(
                            t.eps_ids
                                .iter()
                                .map(|id| (Atom::Eps { id: *id, track: *tr }, false)),
                        );
                    }
                }
                if !ok {
                    continue;
                }
                let succ = stepper.successors(config, &lits, true);
                grouped.entry(npos).or_default().extend(succ);
            }
        }
        layer = Vec::new();
        for (pos, configs) in grouped {
            for c in minimize(configs) {
                let node = (pos.clone(), c);
                if visited.insert(node.clone()) {
                    layer.push(node);
                }
            }
        }
    }
    Err(TransduceError::BudgetExceeded { steps: budget })
}

/// Membership with the parameters existentially quantified.
pub fn recognizes_some(
    t: &Aft,
    tup: &[Word],
    max_steps: Option<usize>,
) -> Result<bool, TransduceError> {
    let params: Vec<u32> = t.params().into_iter().collect();
    for mask in 0u64..1u64 << params.len() {
        let pa: Assignment = params
            .iter()
            .enumerate()
            .map(|(i, s)| (Atom::Param(*s), mask >> i & 1 == 1))
            .collect();
        if recognizes(t, tup, &pa, max_steps)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Character codes of a string.
pub fn codes(s: &str) -> Word {
    s.chars().map(|c| c as u32).collect()
}
