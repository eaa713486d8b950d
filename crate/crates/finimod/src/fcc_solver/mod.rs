//! Theory solver for EUF with cardinality constraints.
//!
//! Wraps the congruence closure with one disequality graph per sort, fixes
//! cardinalities with the signature/sort ladder and enforces bounds with
//! clique lemmas (weak effort) and splitting lemmas (strong effort).

pub mod regions;

use std::collections::{BTreeMap, HashSet};

use crate::euf_cc::{EGraph, EgEvent};
use crate::kernel::{Atom, AtomId, CardScope, Clause, Lit, SortId, Store, TermId};
use crate::sat_core::{Action, Engine, Sat, Theory};

pub use regions::RegionGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CliqueExplain {
    /// Learn `¬card[S,k] ∨ ¬distinct(t1..tk+1)`.
    #[default]
    Lemma,
    /// Report the conflict built from the disequalities forming the clique.
    Conflict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FccConfig {
    pub regions: bool,
    pub clique_explain: CliqueExplain,
    /// Largest signature bound the ladder may try; 0 means no limit.
    pub max_card: u32,
    /// Fix cardinalities with the ladder. Off turns the solver into plain EUF.
    pub ladder: bool,
}

impl Default for FccConfig {
    fn default() -> Self {
        FccConfig { regions: true, clique_explain: CliqueExplain::Lemma, max_card: 0, ladder: true }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FccStats {
    pub clique_lemmas: u64,
    pub clique_conflicts: u64,
    pub splits: u64,
    pub card_conflicts: u64,
    pub ladder_steps: u64,
}

#[derive(Clone, Debug)]
struct LevelMark {
    egraph: usize,
    cards: usize,
    graphs: Vec<usize>,
}

pub struct FccSolver {
    pub cfg: FccConfig,
    pub egraph: EGraph,
    pub stats: FccStats,
    sorts: Vec<SortId>,
    graphs: BTreeMap<SortId, RegionGraph>,
    /// Cardinality literals asserted on the current branch, in trail order.
    cards: Vec<Lit>,
    marks: Vec<LevelMark>,
    seen: HashSet<AtomId>,
    deadline: Option<std::time::Instant>,
}

impl FccSolver {
    /// `sorts` are the uninterpreted sorts fixed by the ladder, in order.
    pub fn new(sorts: Vec<SortId>, cfg: FccConfig) -> FccSolver {
        let mut egraph = EGraph::new();
        egraph.set_record_events(true);
        let graphs = sorts.iter().map(|&s| (s, RegionGraph::new(cfg.regions))).collect();
        FccSolver {
            cfg,
            egraph,
            stats: FccStats::default(),
            sorts,
            graphs,
            cards: Vec::new(),
            marks: Vec::new(),
            seen: HashSet::new(),
            deadline: None,
        }
    }

    /// After this instant weak effort reports [`Action::Exhausted`].
    pub fn set_deadline(&mut self, d: Option<std::time::Instant>) {
        self.deadline = d;
    }

    pub fn sorts(&self) -> &[SortId] {
        &self.sorts
    }

    pub fn graph(&self, s: SortId) -> Option<&RegionGraph> {
        self.graphs.get(&s)
    }

    /// Registers a ground term at the base level, e.g. a witness constant.
    pub fn add_term(&mut self, store: &Store, t: TermId) {
        assert!(self.marks.is_empty(), "terms are registered at level 0 only");
        self.egraph.add_term(store, t);
        self.sync();
    }

    /// Least `k` with `card[scope,k]` asserted positively.
    pub fn bound(&self, store: &Store, scope: CardScope) -> Option<u32> {
        self.cards
            .iter()
            .filter(|l| l.is_pos())
            .filter_map(|l| match store.atom(l.atom()) {
                Atom::Card(s, k) if s == scope => Some(k),
                _ => None,
            })
            .min()
    }

    /// Mirrors queued egraph changes into the disequality graphs.
    fn sync(&mut self) {
        for ev in self.egraph.drain_events() {
            match ev {
                EgEvent::NewClass { node, sort } => {
                    if let Some(g) = self.graph_for(sort) {
                        g.add_vertex(node);
                    }
                }
                EgEvent::Merge { loser, winner, sort } => {
                    if let Some(g) = self.graph_for(sort) {
                        g.merge(loser, winner);
                    }
                }
                EgEvent::Diseq { a, b, sort } => {
                    if let Some(g) = self.graph_for(sort) {
                        g.add_edge(a, b);
                    }
                }
            }
        }
    }

    fn graph_for(&mut self, sort: SortId) -> Option<&mut RegionGraph> {
        if sort == crate::kernel::BOOL {
            return None;
        }
        let regions = self.cfg.regions;
        Some(self.graphs.entry(sort).or_insert_with(|| RegionGraph::new(regions)))
    }

    /// Least `k ≥ from` whose `card[scope,k]` is not false.
    fn least_open(store: &Store, sat: &Sat, scope: CardScope, from: u32) -> u32 {
        let mut k = from;
        while let Some(a) = store.find_card(scope, k) {
            if sat.atom_value(a) != Some(false) {
                break;
            }
            k += 1;
        }
        k
    }

    /// Fixes `card[scope,k]`: learn its tautology when new, else decide it.
    fn fix_card(store: &mut Store, sat: &Sat, scope: CardScope, k: u32) -> Option<Action> {
        let lit = store.card_lit(scope, k, true);
        if !sat.is_active(lit.atom()) {
            return Some(Action::Learn { clause: vec![lit, !lit], phase: Some(lit) });
        }
        match sat.value(lit) {
            None => Some(Action::Decide(lit)),
            _ => None,
        }
    }

    fn ladder(&mut self, store: &mut Store, sat: &Sat) -> Option<Action> {
        let n = self.sorts.len() as u32;
        if n == 0 {
            return None;
        }
        let k = Self::least_open(store, sat, CardScope::Signature, n);
        if self.cfg.max_card != 0 && k > self.cfg.max_card {
            return Some(Action::Exhausted);
        }
        if let Some(a) = Self::fix_card(store, sat, CardScope::Signature, k) {
            self.stats.ladder_steps += 1;
            return Some(a);
        }
        let mut ks = Vec::with_capacity(self.sorts.len());
        for &s in &self.sorts {
            let ki = Self::least_open(store, sat, CardScope::Sort(s), 1);
            if let Some(a) = Self::fix_card(store, sat, CardScope::Sort(s), ki) {
                self.stats.ladder_steps += 1;
                return Some(a);
            }
            ks.push(ki);
        }
        if ks.iter().sum::<u32>() > k {
            let mut clause = vec![store.card_lit(CardScope::Signature, k, false)];
            for (&s, &ki) in self.sorts.iter().zip(&ks) {
                if ki > 1 {
                    clause.push(store.card_lit(CardScope::Sort(s), ki - 1, true));
                }
            }
            self.stats.card_conflicts += 1;
            return Some(Action::Conflict(clause));
        }
        None
    }

    /// `card[X,k]` and `¬card[X,j]` with `j ≥ k` on the trail.
    fn card_inconsistency(&mut self, store: &Store) -> Option<Action> {
        let mut pos: BTreeMap<CardScope, u32> = BTreeMap::new();
        for l in self.cards.iter().filter(|l| l.is_pos()) {
            if let Atom::Card(s, k) = store.atom(l.atom()) {
                let e = pos.entry(s).or_insert(k);
                *e = (*e).min(k);
            }
        }
        for l in self.cards.iter().filter(|l| !l.is_pos()) {
            if let Atom::Card(s, j) = store.atom(l.atom()) {
                if let Some(&k) = pos.get(&s) {
                    if j >= k {
                        let kl = store.find_card(s, k).unwrap();
                        self.stats.card_conflicts += 1;
                        return Some(Action::Conflict(vec![Lit::new(kl, false), Lit::new(l.atom(), true)]));
                    }
                }
            }
        }
        None
    }

    fn check_cliques(&mut self, store: &mut Store, sat: &Sat) -> Option<Action> {
        let sorts: Vec<SortId> = self.graphs.keys().copied().collect();
        for s in sorts {
            let Some(k) = self.bound(store, CardScope::Sort(s)) else { continue };
            let Some(clique) = self.graphs[&s].find_clique() else { continue };
            let terms: Vec<TermId> = clique.iter().map(|&v| self.egraph.term(self.egraph.rep_node(v))).collect();
            let card = store.card_lit(CardScope::Sort(s), k, false);
            match self.cfg.clique_explain {
                CliqueExplain::Lemma => {
                    let mut clause = vec![card];
                    for i in 0..terms.len() {
                        for j in i + 1..terms.len() {
                            clause.push(store.eq_lit(terms[i], terms[j], true));
                        }
                    }
                    if sat.contains(&Clause::new(clause.clone())) {
                        continue;
                    }
                    self.stats.clique_lemmas += 1;
                    return Some(Action::Learn { clause, phase: None });
                }
                CliqueExplain::Conflict => {
                    let mut clause = vec![card];
                    for i in 0..terms.len() {
                        for j in i + 1..terms.len() {
                            let expl = self.egraph.explain_diseq(terms[i], terms[j]).expect("clique edge without source");
                            clause.extend(expl.into_iter().map(|l| !l));
                        }
                    }
                    self.stats.clique_conflicts += 1;
                    return Some(Action::Conflict(clause));
                }
            }
        }
        None
    }

    /// Number of classes per graph-tracked sort.
    pub fn class_counts(&self) -> BTreeMap<SortId, usize> {
        self.graphs.iter().map(|(&s, g)| (s, g.num_vertices())).collect()
    }
}

impl Theory for FccSolver {
    fn register_atom(&mut self, store: &mut Store, atom: AtomId) {
        if !self.seen.insert(atom) {
            return;
        }
        if let Atom::Eq(a, b) = store.atom(atom) {
            let fresh = !self.egraph.is_registered(a) || !self.egraph.is_registered(b);
            assert!(!fresh || self.marks.is_empty(), "new term {} above level 0", store.display(a));
            self.egraph.add_term(store, a);
            self.egraph.add_term(store, b);
            self.sync();
        }
    }

    fn assert_lit(&mut self, store: &mut Store, lit: Lit) -> Result<(), Vec<Lit>> {
        match store.atom(lit.atom()) {
            Atom::Card(scope, k) => {
                self.cards.push(lit);
                if lit.is_pos() {
                    if let CardScope::Sort(s) = scope {
                        let tighter = self.graphs.get(&s).is_some_and(|g| g.bound().is_none_or(|b| k < b));
                        if tighter {
                            self.graphs.get_mut(&s).unwrap().rebuild(k);
                        }
                    }
                }
                Ok(())
            }
            Atom::Eq(..) => {
                let r = self.egraph.assert_lit(store, lit);
                self.sync();
                r
            }
        }
    }

    fn push_level(&mut self) {
        self.marks.push(LevelMark {
            egraph: self.egraph.mark(),
            cards: self.cards.len(),
            graphs: self.graphs.values().map(|g| g.mark()).collect(),
        });
    }

    fn pop_to_level(&mut self, level: usize) {
        if level >= self.marks.len() {
            return;
        }
        let m = self.marks[level].clone();
        self.marks.truncate(level);
        self.egraph.undo_to(m.egraph);
        self.egraph.drain_events();
        self.cards.truncate(m.cards);
        for (g, &gm) in self.graphs.values_mut().zip(&m.graphs) {
            g.undo_to(gm);
        }
    }

    fn weak_effort(&mut self, store: &mut Store, sat: &Sat) -> Action {
        if self.deadline.is_some_and(|d| std::time::Instant::now() >= d) {
            return Action::Exhausted;
        }
        if self.cfg.ladder {
            if let Some(a) = self.ladder(store, sat) {
                return a;
            }
        }
        if let Some(a) = self.card_inconsistency(store) {
            return a;
        }
        self.check_cliques(store, sat).unwrap_or(Action::Clean)
    }

    fn strong_effort(&mut self, store: &mut Store, _sat: &Sat) -> Action {
        let sorts: Vec<SortId> = self.graphs.keys().copied().collect();
        for s in sorts {
            let Some(k) = self.bound(store, CardScope::Sort(s)) else { continue };
            if self.graphs[&s].num_vertices() <= k as usize {
                continue;
            }
            let pair = self.graphs.get_mut(&s).unwrap().split_pair();
            let Some((u, v)) = pair else {
                // Complete graph on more than k vertices: report a clique.
                let vs: Vec<u32> = self.graphs[&s].vertices().into_iter().take(k as usize + 1).collect();
                let mut clause = vec![store.card_lit(CardScope::Sort(s), k, false)];
                for i in 0..vs.len() {
                    for j in i + 1..vs.len() {
                        let (a, b) = (self.egraph.term(vs[i]), self.egraph.term(vs[j]));
                        clause.push(store.eq_lit(a, b, true));
                    }
                }
                self.stats.clique_lemmas += 1;
                return Action::Learn { clause, phase: None };
            };
            let (a, b) = (self.egraph.term(u), self.egraph.term(v));
            let eq = store.eq_lit(a, b, true);
            self.stats.splits += 1;
            return Action::Learn { clause: vec![eq, !eq], phase: Some(eq) };
        }
        Action::Clean
    }
}

/// An engine over `store` with the FCC theory attached and `true ≉ false`
/// asserted.
pub fn new_engine(store: &mut Store, sorts: Vec<SortId>, cfg: FccConfig) -> Engine<FccSolver> {
    let mut eng = Engine::new(FccSolver::new(sorts, cfg));
    let (t, f) = (store.t_true(), store.t_false());
    let tf = store.eq_lit(t, f, false);
    eng.add_clause(store, vec![tf], false);
    eng
}
