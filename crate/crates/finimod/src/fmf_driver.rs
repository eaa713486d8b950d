//! The model finding loop: search for a satisfying assignment under minimal
//! cardinalities, build a candidate model, instantiate the quantifiers it
//! falsifies, and repeat until no instance is needed.
//!
//! Also hosts the MACE-style baseline that encodes a fixed domain size with
//! fresh constants instead of cardinality reasoning.

use std::collections::{BTreeSet, HashSet};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::fcc_solver::{new_engine, CliqueExplain, FccConfig, FccSolver};
use crate::kernel::{Atom, CardScope, Lit, Origin, SortId, Store, Subst, TermId, BOOL};
use crate::mbqi::{choose_instances, Evaluator, InstMode};
use crate::model_builder::{build_model, CandidateModel};
use crate::purifier::PurifiedProblem;
use crate::sat_core::{Engine, Verdict};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub mode: InstMode,
    pub regions: bool,
    pub clique_explain: CliqueExplain,
    /// Largest signature cardinality to try; 0 means unlimited.
    pub max_card: u32,
    /// Most instances per quantifier per round; 0 means unlimited.
    pub inst_cap: usize,
    /// Use the fixed-domain encoding instead of the cardinality ladder.
    pub mace: bool,
    /// Check every sat answer against the input before reporting it.
    pub certify: bool,
    pub timeout: Option<Duration>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: InstMode::Mbqi,
            regions: true,
            clique_explain: CliqueExplain::Lemma,
            max_card: 0,
            inst_cap: 0,
            mace: false,
            certify: false,
            timeout: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub rounds: u64,
    pub instances: u64,
    pub ladder_steps: u64,
    pub clique_lemmas: u64,
    pub splits: u64,
    pub decisions: u64,
    pub conflicts: u64,
    /// Final domain size per sort name.
    pub cards: Vec<(String, usize)>,
}

impl SolveStats {
    pub fn lines(&self) -> Vec<String> {
        let mut v = vec![
            format!("rounds={}", self.rounds),
            format!("instances={}", self.instances),
            format!("ladder_steps={}", self.ladder_steps),
            format!("clique_lemmas={}", self.clique_lemmas),
            format!("splits={}", self.splits),
            format!("decisions={}", self.decisions),
            format!("conflicts={}", self.conflicts),
        ];
        v.extend(self.cards.iter().map(|(s, k)| format!("{s}={k}")));
        v
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub verdict: Verdict,
    pub model: Option<CandidateModel>,
    /// Final trail of a sat answer.
    pub trail: Vec<Lit>,
    pub stats: SolveStats,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error("the baseline encoding handles ground problems over one sort")]
    MaceUnsupported,
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

/// Sorts the ladder has to fix: every declared sort, used or not, since
/// each one needs a nonempty domain.
pub fn problem_sorts(store: &Store) -> Vec<SortId> {
    store.uninterpreted_sorts()
}

fn lit_holds(store: &Store, m: &CandidateModel, l: Lit) -> bool {
    let v = match store.atom(l.atom()) {
        Atom::Eq(a, b) => m.eval_ground(store, a) == m.eval_ground(store, b),
        Atom::Card(CardScope::Sort(s), k) => m.domain(s).len() <= k as usize,
        Atom::Card(CardScope::Signature, k) => {
            let total: usize = m.domains.iter().filter(|(&s, _)| s != BOOL).map(|(_, d)| d.len()).sum();
            total <= k as usize
        }
    };
    v == l.is_pos()
}

/// Every clause of `F` holds and every quantifier whose proxy is true holds,
/// both checked by exhaustive evaluation.
pub fn validate_model(store: &Store, m: &CandidateModel, p: &PurifiedProblem) -> bool {
    if !p.clauses.iter().all(|c| c.iter().any(|&l| lit_holds(store, m, l))) {
        return false;
    }
    p.records.iter().all(|r| {
        let proxy_true = m.maps.get(&r.proxy).is_some_and(|_| {
            let a = store.func(r.proxy);
            debug_assert_eq!(a.origin, Origin::Proxy);
            m.apply(r.proxy, &[]) == m.t_true()
        });
        !proxy_true || m.eval_ground(store, r.formula) == m.t_true()
    })
}

/// Every equality literal of `trail` holds in the model.
pub fn trail_satisfied(store: &Store, m: &CandidateModel, trail: &[Lit]) -> bool {
    trail.iter().all(|&l| matches!(store.atom(l.atom()), Atom::Card(..)) || lit_holds(store, m, l))
}

fn merge_stats(stats: &mut SolveStats, eng: &Engine<FccSolver>) {
    let th = &eng.theory.stats;
    stats.ladder_steps += th.ladder_steps;
    stats.clique_lemmas += th.clique_lemmas + th.clique_conflicts;
    stats.splits += th.splits;
    stats.decisions += eng.sat.stats.decisions;
    stats.conflicts += eng.sat.stats.conflicts;
}

fn final_cards(store: &Store, m: &CandidateModel, sorts: &[SortId]) -> Vec<(String, usize)> {
    sorts.iter().map(|&s| (store.sort_name(s).to_string(), m.domain(s).len())).collect()
}

/// Runs the model finding loop on `p`, which grows with the added instances.
pub fn solve(store: &mut Store, p: &mut PurifiedProblem, cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    if cfg.mace {
        return solve_mace(store, p, cfg);
    }
    let deadline = cfg.timeout.map(|d| Instant::now() + d);
    let sorts = problem_sorts(store);
    let fcc = FccConfig { regions: cfg.regions, clique_explain: cfg.clique_explain, max_card: cfg.max_card, ladder: true };
    let mut eng = new_engine(store, sorts.clone(), fcc);
    eng.theory.set_deadline(deadline);
    for c in p.clauses.clone() {
        eng.add_clause(store, c, false);
    }
    add_witnesses(store, &mut eng, &sorts);
    let mut done: Vec<HashSet<Subst>> = Vec::new();
    let mut stats = SolveStats::default();
    let unknown = |stats: SolveStats| Ok(SolveResult { verdict: Verdict::Unknown, model: None, trail: Vec::new(), stats });
    loop {
        stats.rounds += 1;
        match eng.solve(store) {
            Verdict::Unsat => {
                merge_stats(&mut stats, &eng);
                return Ok(SolveResult { verdict: Verdict::Unsat, model: None, trail: Vec::new(), stats });
            }
            Verdict::Unknown => {
                merge_stats(&mut stats, &eng);
                return unknown(stats);
            }
            Verdict::Sat => {}
        }
        let model = build_model(store, &eng.theory.egraph, &sorts);
        let mut batch: Vec<(usize, Subst)> = Vec::new();
        {
            let ev = Evaluator::new(&model);
            done.resize_with(p.records.len(), HashSet::new);
            for (i, r) in p.records.iter().enumerate() {
                let active = eng.sat.is_active(r.lit.atom()) && eng.sat.is_true(r.lit);
                if !active {
                    continue;
                }
                for s in choose_instances(cfg.mode, &ev, store, r, &eng.theory.egraph, &done[i], cfg.inst_cap) {
                    if !done[i].contains(&s) {
                        batch.push((i, s));
                    }
                }
            }
        }
        if batch.is_empty() {
            if cfg.certify && !validate_model(store, &model, p) {
                return Err(SolveError::Invariant("model fails certification".into()));
            }
            merge_stats(&mut stats, &eng);
            stats.cards = final_cards(store, &model, &sorts);
            return Ok(SolveResult { verdict: Verdict::Sat, model: Some(model), trail: eng.sat.trail().to_vec(), stats });
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            merge_stats(&mut stats, &eng);
            return unknown(stats);
        }
        eng.backtrack_to(0);
        for (i, s) in batch {
            let clauses = p.instantiate(store, i, &s);
            done[i].insert(s);
            stats.instances += 1;
            for c in clauses {
                eng.add_clause(store, c, false);
            }
        }
        add_witnesses(store, &mut eng, &sorts);
    }
}

/// Gives each ladder sort without a registered term a fresh constant.
fn add_witnesses(store: &mut Store, eng: &mut Engine<FccSolver>, sorts: &[SortId]) {
    let has: BTreeSet<SortId> = eng.theory.egraph.terms().iter().map(|&t| store.sort(t)).collect();
    for &s in sorts {
        if !has.contains(&s) {
            let w = store.fresh_fun("w", vec![], s, Origin::Aux);
            let t = store.app(w, &[]);
            eng.theory.add_term(store, t);
        }
    }
}

/// `F ∧ distinct(d1..dk) ∧ ⋀_t (t ≈ d1 ∨ … ∨ t ≈ dk)` over the terms of
/// sort `sort` in `clauses`. Returns the added clauses and the constants.
pub fn encode_mace(store: &mut Store, clauses: &[Vec<Lit>], sort: SortId, k: u32) -> (Vec<Vec<Lit>>, Vec<TermId>) {
    let mut terms = Vec::new();
    for c in clauses {
        for l in c {
            if let Atom::Eq(a, b) = store.atom(l.atom()) {
                store.ground_subterms(a, &mut terms);
                store.ground_subterms(b, &mut terms);
            }
        }
    }
    let mut seen = HashSet::new();
    terms.retain(|&t| store.sort(t) == sort && seen.insert(t));
    let ds: Vec<TermId> = (0..k)
        .map(|_| {
            let d = store.fresh_fun("d", vec![], sort, Origin::Aux);
            store.app(d, &[])
        })
        .collect();
    let mut out: Vec<Vec<Lit>> = clauses.to_vec();
    for i in 0..ds.len() {
        for j in i + 1..ds.len() {
            out.push(vec![store.eq_lit(ds[i], ds[j], false)]);
        }
    }
    for t in terms {
        out.push(ds.iter().map(|&d| store.eq_lit(t, d, true)).collect());
    }
    (out, ds)
}

fn solve_mace(store: &mut Store, p: &PurifiedProblem, cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    let sorts = problem_sorts(store);
    if !p.records.is_empty() || sorts.len() > 1 {
        return Err(SolveError::MaceUnsupported);
    }
    let deadline = cfg.timeout.map(|d| Instant::now() + d);
    let mut stats = SolveStats::default();
    let Some(&sort) = sorts.first() else {
        // Propositional input: one plain solve.
        let mut eng = new_engine(store, vec![], FccConfig { ladder: false, ..Default::default() });
        for c in p.clauses.clone() {
            eng.add_clause(store, c, false);
        }
        let v = eng.solve(store);
        merge_stats(&mut stats, &eng);
        let model = (v == Verdict::Sat).then(|| build_model(store, &eng.theory.egraph, &[]));
        return Ok(SolveResult { verdict: v, model, trail: eng.sat.trail().to_vec(), stats });
    };
    let mut k = 1u32;
    loop {
        if cfg.max_card != 0 && k > cfg.max_card {
            return Ok(SolveResult { verdict: Verdict::Unknown, model: None, trail: Vec::new(), stats });
        }
        stats.rounds += 1;
        let (clauses, _) = encode_mace(store, &p.clauses, sort, k);
        let fcc = FccConfig { ladder: false, ..Default::default() };
        let mut eng = new_engine(store, vec![sort], fcc);
        eng.theory.set_deadline(deadline);
        for c in clauses {
            eng.add_clause(store, c, false);
        }
        let v = eng.solve(store);
        merge_stats(&mut stats, &eng);
        match v {
            Verdict::Sat => {
                let model = build_model(store, &eng.theory.egraph, &[sort]);
                stats.cards = vec![(store.sort_name(sort).to_string(), k as usize)];
                return Ok(SolveResult { verdict: Verdict::Sat, model: Some(model), trail: eng.sat.trail().to_vec(), stats });
            }
            Verdict::Unknown => return Ok(SolveResult { verdict: Verdict::Unknown, model: None, trail: Vec::new(), stats }),
            Verdict::Unsat => k += 1,
        }
    }
}
