//! CDCL engine over interned atoms and the DPLL(T) check loop.
//!
//! The propositional part ([`Sat`]) keeps the trail, two-watched-literal
//! propagation and first-UIP conflict analysis. [`Engine`] drives a single
//! attached [`Theory`] through the usual strategy: propagate, weak effort,
//! decide, strong effort.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::kernel::{AtomId, Clause, Lit, Store};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reason {
    Decision,
    Clause(u32),
    /// Implication clause `l ∨ ¬e1 ∨ ... ∨ ¬en` supplied by the theory.
    Theory(Vec<Lit>),
}

#[derive(Clone, Debug)]
struct ClauseData {
    lits: Vec<Lit>,
    learned: bool,
}

#[derive(Clone, Debug, Default)]
pub struct SatStats {
    pub decisions: u64,
    pub propagations: u64,
    pub conflicts: u64,
    pub learned: u64,
}

/// Propositional state: assignment trail plus clause database.
#[derive(Clone, Debug, Default)]
pub struct Sat {
    value: Vec<Option<bool>>,
    level: Vec<u32>,
    reason: Vec<Reason>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    clauses: Vec<ClauseData>,
    watches: Vec<Vec<u32>>,
    known: HashMap<Vec<Lit>, Option<u32>>,
    heap: BinaryHeap<Reverse<u32>>,
    /// Atoms occurring in some attached clause; only these are branched on.
    active: Vec<bool>,
    phase: Vec<bool>,
    pub stats: SatStats,
}

impl Sat {
    pub fn new() -> Sat {
        Sat::default()
    }

    pub fn ensure_atoms(&mut self, n: usize) {
        while self.value.len() < n {
            self.value.push(None);
            self.level.push(0);
            self.reason.push(Reason::Decision);
            self.phase.push(false);
            self.watches.push(Vec::new());
            self.watches.push(Vec::new());
            self.active.push(false);
        }
    }

    /// Whether the atom occurs in a clause of this solver.
    pub fn is_active(&self, a: AtomId) -> bool {
        self.active.get(a.0 as usize).copied().unwrap_or(false)
    }

    fn activate(&mut self, a: AtomId) {
        self.ensure_atoms(a.0 as usize + 1);
        if !self.active[a.0 as usize] {
            self.active[a.0 as usize] = true;
            self.heap.push(Reverse(a.0));
        }
    }

    pub fn num_atoms(&self) -> usize {
        self.value.len()
    }

    pub fn value(&self, l: Lit) -> Option<bool> {
        let a = l.atom().0 as usize;
        if a >= self.value.len() {
            return None;
        }
        self.value[a].map(|v| v == l.is_pos())
    }

    pub fn is_true(&self, l: Lit) -> bool {
        self.value(l) == Some(true)
    }

    pub fn atom_value(&self, a: AtomId) -> Option<bool> {
        self.value.get(a.0 as usize).copied().flatten()
    }

    pub fn level_of(&self, a: AtomId) -> u32 {
        self.level[a.0 as usize]
    }

    pub fn reason_of(&self, a: AtomId) -> &Reason {
        &self.reason[a.0 as usize]
    }

    pub fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    pub fn trail(&self) -> &[Lit] {
        &self.trail
    }

    /// Trail positions where each decision level starts.
    pub fn trail_lim(&self) -> &[usize] {
        &self.trail_lim
    }

    pub fn set_phase(&mut self, a: AtomId, positive: bool) {
        self.ensure_atoms(a.0 as usize + 1);
        self.phase[a.0 as usize] = positive;
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clause(&self, i: u32) -> &[Lit] {
        &self.clauses[i as usize].lits
    }

    pub fn is_learned(&self, i: u32) -> bool {
        self.clauses[i as usize].learned
    }

    /// Whether this exact (normalized) clause was ever added.
    pub fn contains(&self, c: &Clause) -> bool {
        self.known.contains_key(c.lits())
    }

    /// Opens a new decision level and assigns `l`.
    pub fn decide(&mut self, l: Lit) {
        assert!(self.value(l).is_none(), "decide on an assigned literal");
        self.trail_lim.push(self.trail.len());
        self.stats.decisions += 1;
        self.enqueue(l, Reason::Decision);
    }

    fn enqueue(&mut self, l: Lit, r: Reason) {
        let a = l.atom().0 as usize;
        debug_assert!(self.value[a].is_none());
        self.value[a] = Some(l.is_pos());
        self.level[a] = self.trail_lim.len() as u32;
        self.reason[a] = r;
        self.trail.push(l);
    }

    /// Assigns a theory-implied literal with its implication clause.
    pub fn enqueue_theory(&mut self, l: Lit, implication: Vec<Lit>) {
        debug_assert!(implication.contains(&l));
        self.enqueue(l, Reason::Theory(implication));
    }

    /// Unit propagation to fixpoint; returns a falsified clause on conflict.
    pub fn propagate(&mut self) -> Option<Vec<Lit>> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.index()]);
            let mut i = 0;
            let mut conflict = None;
            while i < ws.len() {
                let ci = ws[i];
                let c = &mut self.clauses[ci as usize].lits;
                if c[0] == false_lit {
                    c.swap(0, 1);
                }
                let first = c[0];
                let first_val = self.value[first.atom().0 as usize].map(|v| v == first.is_pos());
                if first_val == Some(true) {
                    i += 1;
                    continue;
                }
                // Look for a replacement watch.
                let mut moved = false;
                for k in 2..c.len() {
                    let q = c[k];
                    let qv = self.value[q.atom().0 as usize].map(|v| v == q.is_pos());
                    if qv != Some(false) {
                        c.swap(1, k);
                        let nw = c[1];
                        self.watches[nw.index()].push(ci);
                        ws.swap_remove(i);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                if first_val == Some(false) {
                    conflict = Some(c.clone());
                    break;
                }
                self.stats.propagations += 1;
                self.enqueue(first, Reason::Clause(ci));
                i += 1;
            }
            let rest = std::mem::take(&mut self.watches[false_lit.index()]);
            ws.extend(rest);
            self.watches[false_lit.index()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    pub fn backtrack(&mut self, level: usize) {
        if level >= self.trail_lim.len() {
            return;
        }
        let start = self.trail_lim[level];
        for i in (start..self.trail.len()).rev() {
            let a = self.trail[i].atom().0;
            self.value[a as usize] = None;
            self.heap.push(Reverse(a));
        }
        self.trail.truncate(start);
        self.trail_lim.truncate(level);
        self.qhead = self.qhead.min(self.trail.len());
    }

    /// Lowest-index unassigned atom, with its preferred phase.
    pub fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(&Reverse(a)) = self.heap.peek() {
            if self.value[a as usize].is_none() {
                return Some(Lit::new(AtomId(a), self.phase[a as usize]));
            }
            self.heap.pop();
        }
        None
    }

    /// First-UIP analysis of a clause falsified at the current decision
    /// level (which must contain at least one current-level literal).
    /// Returns the learned clause with the asserting literal first and the
    /// backjump level.
    pub fn analyze(&self, conflict: &[Lit]) -> (Vec<Lit>, usize) {
        let cur = self.decision_level() as u32;
        let mut seen = vec![false; self.value.len()];
        let mut learnt = vec![Lit(0)];
        let mut pathc = 0usize;
        let mut idx = self.trail.len();
        let mut clause: Vec<Lit> = conflict.to_vec();
        let mut p: Lit;
        loop {
            for &q in &clause {
                let a = q.atom().0 as usize;
                if seen[a] || self.level[a] == 0 {
                    continue;
                }
                seen[a] = true;
                if self.level[a] == cur {
                    pathc += 1;
                } else {
                    learnt.push(q);
                }
            }
            loop {
                idx -= 1;
                if seen[self.trail[idx].atom().0 as usize] {
                    break;
                }
            }
            let lit = self.trail[idx];
            seen[lit.atom().0 as usize] = false;
            pathc -= 1;
            p = lit;
            if pathc == 0 {
                break;
            }
            clause = match &self.reason[lit.atom().0 as usize] {
                Reason::Clause(ci) => self.clauses[*ci as usize].lits.clone(),
                Reason::Theory(c) => c.clone(),
                Reason::Decision => unreachable!("decision reached before the UIP"),
            };
            clause.retain(|&x| x != lit);
        }
        learnt[0] = !p;
        // Highest remaining level goes second so it is watched.
        let mut bl = 0;
        if learnt.len() > 1 {
            let mut best = 1;
            for i in 1..learnt.len() {
                if self.level[learnt[i].atom().0 as usize] > self.level[learnt[best].atom().0 as usize] {
                    best = i;
                }
            }
            learnt.swap(1, best);
            bl = self.level[learnt[1].atom().0 as usize] as usize;
        }
        (learnt, bl)
    }

    fn lit_rank(&self, l: Lit) -> (u8, i64) {
        match self.value(l) {
            Some(true) => (0, self.level_of(l.atom()) as i64),
            None => (1, 0),
            Some(false) => (2, -(self.level_of(l.atom()) as i64)),
        }
    }

    /// Registers a clause and places its watches on the best two literals
    /// under the current assignment. Tautologies only register their atoms.
    /// Returns `None` when the clause was already known.
    pub fn attach(&mut self, c: &Clause, learned: bool) -> Option<u32> {
        for l in c.lits() {
            self.activate(l.atom());
        }
        if self.known.contains_key(c.lits()) {
            return None;
        }
        if c.is_tautology() || c.is_empty() {
            self.known.insert(c.lits().to_vec(), None);
            return None;
        }
        let mut lits = c.lits().to_vec();
        lits.sort_by_key(|&l| self.lit_rank(l));
        let ci = self.clauses.len() as u32;
        if lits.len() >= 2 {
            self.watches[lits[0].index()].push(ci);
            self.watches[lits[1].index()].push(ci);
        }
        self.known.insert(c.lits().to_vec(), Some(ci));
        self.clauses.push(ClauseData { lits, learned });
        if learned {
            self.stats.learned += 1;
        }
        Some(ci)
    }

    /// Attaches a learned clause whose first literal is asserting and second
    /// literal has the highest remaining level.
    fn attach_asserting(&mut self, lits: Vec<Lit>) -> u32 {
        let key = Clause::new(lits.clone());
        if let Some(&Some(ci)) = self.known.get(key.lits()) {
            self.rewatch(ci, lits);
            return ci;
        }
        let ci = self.clauses.len() as u32;
        if lits.len() >= 2 {
            self.watches[lits[0].index()].push(ci);
            self.watches[lits[1].index()].push(ci);
        }
        self.known.insert(key.into_lits(), Some(ci));
        self.clauses.push(ClauseData { lits, learned: true });
        self.stats.learned += 1;
        ci
    }

    fn rewatch(&mut self, ci: u32, lits: Vec<Lit>) {
        let old = self.clauses[ci as usize].lits.clone();
        if old.len() >= 2 {
            for w in [old[0], old[1]] {
                self.watches[w.index()].retain(|&x| x != ci);
            }
        }
        if lits.len() >= 2 {
            self.watches[lits[0].index()].push(ci);
            self.watches[lits[1].index()].push(ci);
        }
        self.clauses[ci as usize].lits = lits;
    }

    /// Every clause satisfied by the (complete) assignment.
    pub fn all_clauses_satisfied(&self) -> bool {
        self.clauses.iter().all(|c| c.lits.iter().any(|&l| self.is_true(l)))
    }
}

/// Outcome of a theory check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Clean,
    /// Add a clause (Learn); `phase` marks literals to decide positively.
    Learn { clause: Vec<Lit>, phase: Option<Lit> },
    /// A clause falsified by the current trail.
    Conflict(Vec<Lit>),
    Decide(Lit),
    /// A resource bound was reached.
    Exhausted,
}

pub trait Theory {
    /// Called once for every atom occurring in a clause added to the engine.
    fn register_atom(&mut self, store: &mut Store, atom: AtomId);
    /// Asserts a trail literal; on inconsistency returns asserted literals
    /// whose conjunction is unsatisfiable.
    fn assert_lit(&mut self, store: &mut Store, lit: Lit) -> Result<(), Vec<Lit>>;
    fn push_level(&mut self);
    fn pop_to_level(&mut self, level: usize);
    fn weak_effort(&mut self, store: &mut Store, sat: &Sat) -> Action;
    fn strong_effort(&mut self, store: &mut Store, sat: &Sat) -> Action;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Sat,
    Unsat,
    Unknown,
}

/// DPLL(T) engine with one attached theory.
pub struct Engine<T: Theory> {
    pub sat: Sat,
    pub theory: T,
    th_head: usize,
    unsat: bool,
}

impl<T: Theory> Engine<T> {
    pub fn new(theory: T) -> Self {
        Engine { sat: Sat::new(), theory, th_head: 0, unsat: false }
    }

    pub fn is_unsat(&self) -> bool {
        self.unsat
    }

    pub fn backtrack_to(&mut self, level: usize) {
        if level >= self.sat.decision_level() {
            return;
        }
        self.sat.backtrack(level);
        self.theory.pop_to_level(level);
        self.th_head = self.th_head.min(self.sat.trail().len());
    }

    fn decide(&mut self, l: Lit) {
        debug_assert_eq!(self.th_head, self.sat.trail().len());
        self.theory.push_level();
        self.sat.decide(l);
    }

    /// Adds a clause at any point of the search, restoring the watch and
    /// propagation invariants. Returns false once the clause set is refuted.
    pub fn add_clause(&mut self, store: &mut Store, lits: Vec<Lit>, learned: bool) -> bool {
        if self.unsat {
            return false;
        }
        let c = Clause::new(lits);
        for &l in c.lits() {
            if l.atom().0 as usize >= self.sat.num_atoms() {
                self.sat.ensure_atoms(l.atom().0 as usize + 1);
            }
        }
        let fresh: Vec<AtomId> = {
            let mut v: Vec<AtomId> = c.lits().iter().map(|l| l.atom()).collect();
            v.sort();
            v.dedup();
            v
        };
        for a in fresh {
            self.theory.register_atom(store, a);
        }
        if c.is_empty() {
            self.unsat = true;
            return false;
        }
        let Some(ci) = self.sat.attach(&c, learned) else {
            return true;
        };
        let lits = self.sat.clause(ci).to_vec();
        let non_false = lits.iter().filter(|&&l| self.sat.value(l) != Some(false)).count();
        let lvl = |s: &Sat, l: Lit| s.level_of(l.atom()) as usize;
        if non_false >= 2 {
            return true;
        }
        if non_false == 1 {
            let l0 = lits[0];
            let lf = if lits.len() > 1 { lvl(&self.sat, lits[1]) } else { 0 };
            match self.sat.value(l0) {
                Some(true) if lvl(&self.sat, l0) <= lf => {}
                _ => {
                    self.backtrack_to(lf);
                    if self.sat.value(l0).is_none() {
                        self.sat.enqueue(l0, Reason::Clause(ci));
                    }
                }
            }
            return true;
        }
        self.resolve_falsified(lits, Some(ci))
    }

    /// Handles a clause all of whose literals are false.
    fn resolve_falsified(&mut self, lits: Vec<Lit>, attached: Option<u32>) -> bool {
        self.sat.stats.conflicts += 1;
        if lits.is_empty() {
            self.unsat = true;
            return false;
        }
        let lv = |s: &Sat, l: Lit| s.level_of(l.atom()) as usize;
        let top = lits.iter().map(|&l| lv(&self.sat, l)).max().unwrap();
        if top == 0 {
            self.unsat = true;
            return false;
        }
        self.backtrack_to(top);
        let at_top: Vec<Lit> = lits.iter().copied().filter(|&l| lv(&self.sat, l) == top).collect();
        if at_top.len() == 1 {
            let l = at_top[0];
            let second = lits.iter().filter(|&&x| x != l).map(|&x| lv(&self.sat, x)).max().unwrap_or(0);
            let mut ordered = vec![l];
            let mut rest: Vec<Lit> = lits.iter().copied().filter(|&x| x != l).collect();
            rest.sort_by_key(|&x| Reverse(lv(&self.sat, x)));
            ordered.extend(rest);
            self.backtrack_to(second);
            let ci = match attached {
                Some(ci) => {
                    self.sat.rewatch(ci, ordered);
                    ci
                }
                None => self.sat.attach_asserting(ordered),
            };
            self.sat.enqueue(l, Reason::Clause(ci));
            return true;
        }
        let (learnt, bl) = self.sat.analyze(&lits);
        self.backtrack_to(bl);
        let uip = learnt[0];
        let ci = self.sat.attach_asserting(learnt);
        self.sat.enqueue(uip, Reason::Clause(ci));
        true
    }

    /// Unit propagation interleaved with theory assertion.
    fn propagate_all(&mut self, store: &mut Store) -> Option<Vec<Lit>> {
        loop {
            if let Some(c) = self.sat.propagate() {
                return Some(c);
            }
            if self.th_head == self.sat.trail().len() {
                return None;
            }
            while self.th_head < self.sat.trail().len() {
                let l = self.sat.trail()[self.th_head];
                if let Err(expl) = self.theory.assert_lit(store, l) {
                    return Some(expl.into_iter().map(|x| !x).collect());
                }
                self.th_head += 1;
            }
        }
    }

    fn apply(&mut self, store: &mut Store, a: Action) -> Option<Verdict> {
        match a {
            Action::Clean => None,
            Action::Learn { clause, phase } => {
                if let Some(p) = phase {
                    self.sat.set_phase(p.atom(), p.is_pos());
                }
                if !self.add_clause(store, clause, true) {
                    return Some(Verdict::Unsat);
                }
                None
            }
            Action::Conflict(c) => {
                if !self.resolve_falsified(c, None) {
                    return Some(Verdict::Unsat);
                }
                None
            }
            Action::Decide(l) => {
                self.decide(l);
                None
            }
            Action::Exhausted => Some(Verdict::Unknown),
        }
    }

    /// Runs the check loop until a verdict. Can be called again after more
    /// clauses are added.
    pub fn solve(&mut self, store: &mut Store) -> Verdict {
        if self.unsat {
            return Verdict::Unsat;
        }
        loop {
            if let Some(c) = self.propagate_all(store) {
                if !self.resolve_falsified(c, None) {
                    return Verdict::Unsat;
                }
                continue;
            }
            let weak = self.theory.weak_effort(store, &self.sat);
            if weak != Action::Clean {
                if let Some(v) = self.apply(store, weak) {
                    return v;
                }
                continue;
            }
            if let Some(l) = self.sat.pick_branch() {
                self.decide(l);
                continue;
            }
            match self.theory.strong_effort(store, &self.sat) {
                Action::Clean => {
                    debug_assert!(self.sat.all_clauses_satisfied());
                    return Verdict::Sat;
                }
                other => {
                    if let Some(v) = self.apply(store, other) {
                        return v;
                    }
                }
            }
        }
    }
}

/// A theory that accepts everything; turns the engine into a plain SAT solver.
#[derive(Clone, Debug, Default)]
pub struct NoTheory;

impl Theory for NoTheory {
    fn register_atom(&mut self, _: &mut Store, _: AtomId) {}
    fn assert_lit(&mut self, _: &mut Store, _: Lit) -> Result<(), Vec<Lit>> {
        Ok(())
    }
    fn push_level(&mut self) {}
    fn pop_to_level(&mut self, _: usize) {}
    fn weak_effort(&mut self, _: &mut Store, _: &Sat) -> Action {
        Action::Clean
    }
    fn strong_effort(&mut self, _: &mut Store, _: &Sat) -> Action {
        Action::Clean
    }
}
