// SPDX-License-Identifier: Apache-2.0

//! A small CDCL solver: two watched literals, first-UIP learning with
//! local minimisation, VSIDS, phase saving, Luby restarts and solving
//! under assumptions. Clauses may be added between calls.

use std::ops::Not;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(v: Var, positive: bool) -> Lit {
        Lit(v.0 << 1 | (!positive) as u32)
    }

    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    fn idx(self) -> usize {
        self.0 as usize
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Value {
    True,
    False,
    Undef,
}

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
}

pub struct Solver {
    clauses: Vec<Clause>,
    watches: Vec<Vec<usize>>,
    assigns: Vec<Value>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    heap: VarHeap,
    phase: Vec<bool>,
    seen: Vec<bool>,
    model: Vec<bool>,
    ok: bool,
    restarts: u32,
    conflicts: u64,
    reduce_at: usize,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new()
    }
}

impl Solver {
    pub fn new() -> Self {
        Solver {
            clauses: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            heap: VarHeap::default(),
            phase: Vec::new(),
            seen: Vec::new(),
            model: Vec::new(),
            ok: true,
            restarts: 0,
            conflicts: 0,
            reduce_at: REDUCE_MIN,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn conflicts(&self) -> u64 {
        self.conflicts
    }

    pub fn new_var(&mut self) -> Var {
        let v = Var(self.assigns.len() as u32);
        self.assigns.push(Value::Undef);
        self.level.push(0);
        self.reason.push(None);
        self.activity.push(0.0);
        self.phase.push(false);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.heap.insert(v.0 as usize, &self.activity);
        v
    }

    fn value(&self, l: Lit) -> Value {
        match self.assigns[l.var().0 as usize] {
            Value::Undef => Value::Undef,
            Value::True if l.is_positive() => Value::True,
            Value::False if !l.is_positive() => Value::True,
            _ => Value::False,
        }
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    /// Adds a clause; returns false once the clause set is known unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        self.cancel_until(0);
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort();
        c.dedup();
        for w in c.windows(2) {
            if w[0] == !w[1] {
                return true;
            }
        }
        let mut kept = Vec::with_capacity(c.len());
        for &l in &c {
            match self.value(l) {
                Value::True => return true,
                Value::False => {}
                Value::Undef => kept.push(l),
            }
        }
        match kept.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(kept[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                self.attach(kept, false);
                true
            }
        }
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> usize {
        let cr = self.clauses.len();
        self.watches[lits[0].idx()].push(cr);
        self.watches[lits[1].idx()].push(cr);
        self.clauses.push(Clause { lits, learnt });
        cr
    }

    /// At level 0 after propagation: drops satisfied clauses, strips false
    /// literals and keeps the shorter half of the learnt clauses.
    fn reduce(&mut self) {
        let old = std::mem::take(&mut self.clauses);
        let (mut kept, mut learnts) = (Vec::new(), Vec::new());
        let mut units = Vec::new();
        for c in old {
            if c.lits.iter().any(|l| self.value(*l) == Value::True) {
                continue;
            }
            let lits: Vec<Lit> = c.lits.into_iter().filter(|l| self.value(*l) == Value::Undef).collect();
            match lits.len() {
                0 => self.ok = false,
                1 => units.push(lits[0]),
                _ if c.learnt => learnts.push(lits),
                _ => kept.push(lits),
            }
        }
        learnts.sort_by_key(|c| c.len());
        let keep = learnts.len() / 2;
        learnts.truncate(keep.max(learnts.iter().take_while(|c| c.len() <= 3).count()));
        for &l in &self.trail {
            self.reason[l.var().0 as usize] = None;
        }
        for w in self.watches.iter_mut() {
            w.clear();
        }
        for c in kept {
            self.attach(c, false);
        }
        for c in learnts {
            self.attach(c, true);
        }
        for l in units {
            match self.value(l) {
                Value::Undef => self.enqueue(l, None),
                Value::False => self.ok = false,
                Value::True => {}
            }
        }
        if self.ok && self.propagate().is_some() {
            self.ok = false;
        }
        self.reduce_at = (2 * self.clauses.len()).max(REDUCE_MIN);
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = l.var().0 as usize;
        self.assigns[v] = if l.is_positive() {
            Value::True
        } else {
            Value::False
        };
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.idx()]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let cr = ws[i];
                i += 1;
                let lits = &mut self.clauses[cr].lits;
                if lits[0] == false_lit {
                    lits.swap(0, 1);
                }
                let first = lits[0];
                let first_val = lit_value(&self.assigns, first);
                if first_val == Value::True {
                    ws[j] = cr;
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..lits.len() {
                    if lit_value(&self.assigns, lits[k]) != Value::False {
                        lits.swap(1, k);
                        self.watches[lits[1].idx()].push(cr);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = cr;
                j += 1;
                if first_val == Value::False {
                    conflict = Some(cr);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                    self.qhead = self.trail.len();
                } else {
                    let v = first.var().0 as usize;
                    self.assigns[v] = if first.is_positive() {
                        Value::True
                    } else {
                        Value::False
                    };
                    self.level[v] = self.trail_lim.len() as u32;
                    self.reason[v] = Some(cr);
                    self.trail.push(first);
                }
            }
            ws.truncate(j);
            self.watches[false_lit.idx()] = ws;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    fn cancel_until(&mut self, lvl: usize) {
        if self.decision_level() <= lvl {
            return;
        }
        let start = self.trail_lim[lvl];
        for idx in (start..self.trail.len()).rev() {
            let l = self.trail[idx];
            let v = l.var().0 as usize;
            self.assigns[v] = Value::Undef;
            self.reason[v] = None;
            self.phase[v] = l.is_positive();
            if !self.heap.contains(v) {
                self.heap.insert(v, &self.activity);
            }
        }
        self.trail.truncate(start);
        self.trail_lim.truncate(lvl);
        self.qhead = start;
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        if self.heap.contains(v) {
            self.heap.decrease(v, &self.activity);
        }
    }

    fn analyze(&mut self, mut confl: usize) -> (Vec<Lit>, usize) {
        let dl = self.decision_level() as u32;
        let mut learnt: Vec<Lit> = vec![Lit(0)];
        let mut pathc = 0usize;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        loop {
            let skip = usize::from(p.is_some());
            let lits = self.clauses[confl].lits.clone();
            for &q in &lits[skip..] {
                let v = q.var().0 as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump(v);
                    self.seen[v] = true;
                    if self.level[v] >= dl {
                        pathc += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var().0 as usize] {
                    break;
                }
            }
            let lit = self.trail[idx];
            let v = lit.var().0 as usize;
            self.seen[v] = false;
            pathc -= 1;
            p = Some(lit);
            if pathc == 0 {
                break;
            }
            confl = self.reason[v].expect("implied literal has a reason");
        }
        learnt[0] = !p.unwrap();

        // local minimisation: drop literals implied by other learnt literals
        let mut kept = vec![learnt[0]];
        for &l in &learnt[1..] {
            let v = l.var().0 as usize;
            let redundant = match self.reason[v] {
                None => false,
                Some(r) => self.clauses[r].lits[1..].iter().all(|q| {
                    let w = q.var().0 as usize;
                    self.seen[w] || self.level[w] == 0
                }),
            };
            if !redundant {
                kept.push(l);
            }
        }
        for &l in &learnt[1..] {
            self.seen[l.var().0 as usize] = false;
        }
        let mut learnt = kept;

        let bt = if learnt.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var().0 as usize] > self.level[learnt[max_i].var().0 as usize] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            self.level[learnt[1].var().0 as usize] as usize
        };
        (learnt, bt)
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v] == Value::Undef {
                return Some(Lit::new(Var(v as u32), self.phase[v]));
            }
        }
        None
    }

    /// Solves under the given assumptions. On success the model is
    /// available through [`Solver::model_value`].
    pub fn solve(&mut self, assumptions: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        self.cancel_until(0);
        if self.propagate().is_some() {
            self.ok = false;
            return false;
        }
        if self.clauses.len() >= self.reduce_at {
            self.reduce();
            if !self.ok {
                return false;
            }
        }
        let mut budget = luby(self.restarts) * 100;
        let mut local_conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.conflicts += 1;
                local_conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return false;
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let first = learnt[0];
                    let cr = self.attach(learnt, true);
                    self.enqueue(first, Some(cr));
                }
                self.var_inc *= 1.0 / 0.95;
                continue;
            }
            if local_conflicts >= budget {
                self.restarts += 1;
                budget = luby(self.restarts) * 100;
                local_conflicts = 0;
                self.cancel_until(0);
                continue;
            }
            let mut next = None;
            while self.decision_level() < assumptions.len() {
                let a = assumptions[self.decision_level()];
                match self.value(a) {
                    Value::True => self.trail_lim.push(self.trail.len()),
                    Value::False => {
                        self.cancel_until(0);
                        return false;
                    }
                    Value::Undef => {
                        next = Some(a);
                        break;
                    }
                }
            }
            let lit = match next {
                Some(l) => l,
                None => match self.pick_branch() {
                    Some(l) => l,
                    None => {
                        self.model = self.assigns.iter().map(|v| *v == Value::True).collect();
                        self.cancel_until(0);
                        return true;
                    }
                },
            };
            self.trail_lim.push(self.trail.len());
            self.enqueue(lit, None);
        }
    }

    pub fn model_value(&self, v: Var) -> bool {
        self.model.get(v.0 as usize).copied().unwrap_or(false)
    }

    pub fn model_lit(&self, l: Lit) -> bool {
        self.model_value(l.var()) == l.is_positive()
    }
}

const REDUCE_MIN: usize = 20_000;

fn lit_value(assigns: &[Value], l: Lit) -> Value {
    match assigns[l.var().0 as usize] {
        Value::Undef => Value::Undef,
        Value::True if l.is_positive() => Value::True,
        Value::False if !l.is_positive() => Value::True,
        _ => Value::False,
    }
}

fn luby(mut i: u32) -> u64 {
    // finite subsequences of the Luby sequence: 1 1 2 1 1 2 4 ...
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < i as u64 + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    let mut x = i as u64;
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    i = seq;
    1u64 << i
}

/// Max-heap on activity, indexed by variable.
#[derive(Default)]
struct VarHeap {
    heap: Vec<usize>,
    pos: Vec<Option<usize>>,
}

impl VarHeap {
    fn contains(&self, v: usize) -> bool {
        self.pos.get(v).copied().flatten().is_some()
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.pos.len() <= v {
            self.pos.resize(v + 1, None);
        }
        if self.pos[v].is_some() {
            return;
        }
        self.heap.push(v);
        self.pos[v] = Some(self.heap.len() - 1);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn decrease(&mut self, v: usize, act: &[f64]) {
        if let Some(i) = self.pos[v] {
            self.sift_up(i, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap[0];
        let last = self.heap.pop().unwrap();
        self.pos[top] = None;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last] = Some(0);
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let pv = self.heap[parent];
            if act[pv] >= act[v] {
                break;
            }
            self.heap[i] = pv;
            self.pos[pv] = Some(i);
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v] = Some(i);
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        loop {
            let l = 2 * i + 1;
            if l >= self.heap.len() {
                break;
            }
            let r = l + 1;
            let child = if r < self.heap.len() && act[self.heap[r]] > act[self.heap[l]] {
                r
            } else {
                l
            };
            if act[self.heap[child]] <= act[v] {
                break;
            }
            let cv = self.heap[child];
            self.heap[i] = cv;
            self.pos[cv] = Some(i);
            i = child;
        }
        self.heap[i] = v;
        self.pos[v] = Some(i);
    }
}
