//! Model-based quantifier instantiation.
//!
//! [`Evaluator::eval`] computes the value of a term under a substitution
//! together with a set of critical variables: any substitution agreeing on
//! those variables gives the same value. [`h_m`] uses this to skip whole
//! blocks of tuples when searching for falsified instances.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap, HashSet};

use thiserror::Error;

use crate::euf_cc::EGraph;
use crate::kernel::{FuncId, Node, Store, Subst, TermId};
use crate::model_builder::{for_each_tuple, CandidateModel};
use crate::purifier::QuantRecord;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("variable {0} has no value")]
    Unmapped(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalResult {
    pub value: TermId,
    pub critical: BTreeSet<TermId>,
}

/// Memoized constancy queries for one function. A query fixes some argument
/// positions to values and leaves the rest free; the answer is the common
/// value over all completions, if there is one.
#[derive(Debug, Default)]
pub struct FunctionIndex {
    memo: HashMap<Vec<Option<TermId>>, Option<TermId>>,
}

/// Constancy queries that would enumerate more tuples than this report
/// "not constant", which only costs generality.
const CONSTANCY_BUDGET: usize = 1 << 14;

/// Evaluation context over one candidate model.
pub struct Evaluator<'a> {
    pub model: &'a CandidateModel,
    indexes: RefCell<HashMap<FuncId, FunctionIndex>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(model: &'a CandidateModel) -> Evaluator<'a> {
        Evaluator { model, indexes: RefCell::new(HashMap::new()) }
    }

    /// Common value of `f` over all completions of `partial`.
    pub fn constant_value(&self, store: &Store, f: FuncId, partial: &[Option<TermId>]) -> Option<TermId> {
        let doms: Vec<&[TermId]> = store.func(f).args.iter().map(|&s| self.model.domain(s)).collect();
        let size: usize = partial
            .iter()
            .zip(&doms)
            .map(|(p, d)| if p.is_some() { 1 } else { d.len().max(1) })
            .try_fold(1usize, |acc, n| acc.checked_mul(n))
            .unwrap_or(usize::MAX);
        if size > CONSTANCY_BUDGET {
            return None;
        }
        let mut idx = self.indexes.borrow_mut();
        let index = idx.entry(f).or_default();
        self.constant_rec(f, partial.to_vec(), &doms, index)
    }

    fn constant_rec(
        &self,
        f: FuncId,
        partial: Vec<Option<TermId>>,
        doms: &[&[TermId]],
        index: &mut FunctionIndex,
    ) -> Option<TermId> {
        if let Some(&r) = index.memo.get(&partial) {
            return r;
        }
        let r = match partial.iter().position(|p| p.is_none()) {
            None => {
                let args: Vec<TermId> = partial.iter().map(|p| p.unwrap()).collect();
                Some(self.model.apply(f, &args))
            }
            Some(i) => {
                let mut common: Option<TermId> = None;
                let mut ok = !doms[i].is_empty();
                for &v in doms[i] {
                    let mut q = partial.clone();
                    q[i] = Some(v);
                    match self.constant_rec(f, q, doms, index) {
                        Some(x) if common.is_none_or(|c| c == x) => common = Some(x),
                        _ => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    common
                } else {
                    None
                }
            }
        };
        index.memo.insert(partial, r);
        r
    }

    pub fn eval(&self, store: &Store, t: TermId, sigma: &Subst) -> Result<EvalResult, EvalError> {
        let mut env: HashMap<TermId, TermId> = sigma.iter().collect();
        self.eval_env(store, t, &mut env)
    }

    fn eval_env(&self, store: &Store, t: TermId, env: &mut HashMap<TermId, TermId>) -> Result<EvalResult, EvalError> {
        let m = self.model;
        let leaf = |value| EvalResult { value, critical: BTreeSet::new() };
        Ok(match store.node(t) {
            Node::Var { name, .. } => {
                let v = *env.get(&t).ok_or_else(|| EvalError::Unmapped(name.clone()))?;
                EvalResult { value: v, critical: BTreeSet::from([t]) }
            }
            Node::App { func, args } => {
                if t == m.t_true() || t == m.t_false() {
                    return Ok(leaf(t));
                }
                let kids = args.iter().map(|&a| self.eval_env(store, a, env)).collect::<Result<Vec<_>, _>>()?;
                let vals: Vec<TermId> = kids.iter().map(|k| k.value).collect();
                let value = m.apply(*func, &vals);
                // Free the arguments with the largest critical sets first,
                // keeping each one whose release leaves f constant.
                let mut order: Vec<usize> = (0..kids.len()).filter(|&i| !kids[i].critical.is_empty()).collect();
                order.sort_by_key(|&i| (std::cmp::Reverse(kids[i].critical.len()), i));
                let mut partial: Vec<Option<TermId>> = vals.iter().map(|&v| Some(v)).collect();
                for i in order {
                    partial[i] = None;
                    if self.constant_value(store, *func, &partial).is_none() {
                        partial[i] = Some(vals[i]);
                    }
                }
                let mut critical = BTreeSet::new();
                for (i, k) in kids.iter().enumerate() {
                    if partial[i].is_some() {
                        critical.extend(k.critical.iter().copied());
                    }
                }
                EvalResult { value, critical }
            }
            Node::Eq(a, b) => {
                let (ra, rb) = (self.eval_env(store, *a, env)?, self.eval_env(store, *b, env)?);
                let mut critical = ra.critical;
                critical.extend(rb.critical);
                EvalResult { value: m.bool_value(ra.value == rb.value), critical }
            }
            Node::Not(a) => {
                let r = self.eval_env(store, *a, env)?;
                EvalResult { value: m.bool_value(r.value == m.t_false()), critical: r.critical }
            }
            Node::And(args) | Node::Or(args) => {
                let is_and = matches!(store.node(t), Node::And(_));
                // The value that decides the connective on its own.
                let decisive = m.bool_value(!is_and);
                let kids = args.iter().map(|&a| self.eval_env(store, a, env)).collect::<Result<Vec<_>, _>>()?;
                let best = kids
                    .iter()
                    .enumerate()
                    .filter(|(_, k)| k.value == decisive)
                    .min_by_key(|(i, k)| (k.critical.len(), *i))
                    .map(|(i, _)| i);
                match best {
                    Some(i) => EvalResult { value: decisive, critical: kids[i].critical.clone() },
                    None => {
                        let mut critical = BTreeSet::new();
                        for k in kids {
                            critical.extend(k.critical);
                        }
                        EvalResult { value: m.bool_value(is_and), critical }
                    }
                }
            }
            Node::Forall { vars, body } => {
                let doms: Vec<Vec<TermId>> = vars.iter().map(|&v| m.domain(store.sort(v)).to_vec()).collect();
                let saved: Vec<Option<TermId>> = vars.iter().map(|v| env.get(v).copied()).collect();
                let mut critical = BTreeSet::new();
                let mut falsified: Option<BTreeSet<TermId>> = None;
                let mut err = None;
                for_each_tuple(&doms, |tuple| {
                    for (&x, &v) in vars.iter().zip(tuple) {
                        env.insert(x, v);
                    }
                    match self.eval_env(store, *body, env) {
                        Ok(r) if r.value == m.t_true() => {
                            critical.extend(r.critical);
                            true
                        }
                        Ok(r) => {
                            falsified = Some(r.critical);
                            false
                        }
                        Err(e) => {
                            err = Some(e);
                            false
                        }
                    }
                });
                for (&x, old) in vars.iter().zip(saved) {
                    match old {
                        Some(v) => env.insert(x, v),
                        None => env.remove(&x),
                    };
                }
                if let Some(e) = err {
                    return Err(e);
                }
                let (value, mut critical) = match falsified {
                    Some(c) => (m.t_false(), c),
                    None => (m.t_true(), critical),
                };
                for v in vars {
                    critical.remove(v);
                }
                EvalResult { value, critical }
            }
        })
    }
}

/// A position in the lexicographic enumeration of `V_x1 × … × V_xn`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TupleCursor {
    pub domains: Vec<Vec<TermId>>,
    /// Index into each domain.
    pub current: Vec<usize>,
}

impl TupleCursor {
    pub fn new(domains: Vec<Vec<TermId>>) -> TupleCursor {
        let n = domains.len();
        TupleCursor { domains, current: vec![0; n] }
    }

    pub fn values(&self) -> Vec<TermId> {
        self.current.iter().zip(&self.domains).map(|(&i, d)| d[i]).collect()
    }

    pub fn is_min(&self) -> bool {
        self.current.iter().all(|&i| i == 0)
    }

    /// Steps to `next_i`: the least larger tuple that changes one of the
    /// first `n+1-i` positions, or back to the minimum when none exists.
    pub fn next_i(&mut self, i: usize) {
        let n = self.domains.len();
        if i == 0 || i > n {
            self.current.iter_mut().for_each(|c| *c = 0);
            return;
        }
        let m = n + 1 - i;
        for c in &mut self.current[m..] {
            *c = 0;
        }
        let mut j = m;
        while j > 0 {
            j -= 1;
            self.current[j] += 1;
            if self.current[j] < self.domains[j].len() {
                return;
            }
            self.current[j] = 0;
        }
    }
}

/// Substitutions falsifying `∀x̄ φ` in the model, one per block of tuples
/// that share the falsifying critical values. `cap` of 0 means unlimited.
pub fn h_m(ev: &Evaluator, store: &Store, q: &QuantRecord, cap: usize) -> Vec<Subst> {
    let doms: Vec<Vec<TermId>> = q.vars.iter().map(|&x| ev.model.domain(store.sort(x)).to_vec()).collect();
    if doms.iter().any(|d| d.is_empty()) {
        return Vec::new();
    }
    let n = q.vars.len();
    let mut cur = TupleCursor::new(doms);
    let mut out = Vec::new();
    loop {
        let sigma = Subst::from_pairs(store, q.vars.iter().copied().zip(cur.values()));
        let r = ev.eval(store, q.body, &sigma).expect("quantifier body over its own variables");
        if r.value == ev.model.t_false() {
            out.push(sigma);
            if cap != 0 && out.len() >= cap {
                return out;
            }
        }
        let top = q.vars.iter().enumerate().filter(|(_, x)| r.critical.contains(x)).map(|(i, _)| i + 1).max().unwrap_or(0);
        cur.next_i(n + 1 - top);
        if cur.is_min() {
            return out;
        }
    }
}

/// Every substitution over the model's domains.
pub fn exhaustive(model: &CandidateModel, store: &Store, q: &QuantRecord) -> Vec<Subst> {
    let doms: Vec<Vec<TermId>> = q.vars.iter().map(|&x| model.domain(store.sort(x)).to_vec()).collect();
    let mut out = Vec::new();
    for_each_tuple(&doms, |t| {
        out.push(Subst::from_pairs(store, q.vars.iter().copied().zip(t.iter().copied())));
        true
    });
    out
}

/// Smallest application of an uninterpreted function in the body that
/// mentions every quantified variable.
pub fn trigger(store: &Store, q: &QuantRecord) -> Option<TermId> {
    let mut best: Option<(usize, TermId)> = None;
    let mut stack = vec![q.body];
    let mut seen = HashSet::new();
    while let Some(t) = stack.pop() {
        if !seen.insert(t) {
            continue;
        }
        match store.node(t) {
            Node::App { args, .. } => {
                let fv = store.free_vars(t);
                if !args.is_empty() && q.vars.iter().all(|x| fv.contains(x)) {
                    let size = term_size(store, t);
                    if best.is_none_or(|(s, b)| (size, t) < (s, b)) {
                        best = Some((size, t));
                    }
                }
                stack.extend(args.iter().copied());
            }
            Node::Eq(a, b) => stack.extend([*a, *b]),
            Node::Not(a) => stack.push(*a),
            Node::And(xs) | Node::Or(xs) => stack.extend(xs.iter().copied()),
            Node::Forall { .. } | Node::Var { .. } => {}
        }
    }
    best.map(|(_, t)| t)
}

fn term_size(store: &Store, t: TermId) -> usize {
    match store.node(t) {
        Node::App { args, .. } => 1 + args.iter().map(|&a| term_size(store, a)).sum::<usize>(),
        _ => 1,
    }
}

/// Substitutions making the trigger congruent to a registered term, with
/// values taken as class representatives.
pub fn e_match(store: &Store, q: &QuantRecord, eg: &EGraph) -> Vec<Subst> {
    let Some(pat) = trigger(store, q) else { return Vec::new() };
    let (f, _) = store.as_app(pat).unwrap();
    let mut out: BTreeSet<Subst> = BTreeSet::new();
    for &t in eg.terms() {
        if store.as_app(t).map(|(g, _)| g) != Some(f) {
            continue;
        }
        for s in match_term(store, eg, pat, t, Subst::new()) {
            if q.vars.iter().all(|&x| s.get(x).is_some()) {
                out.insert(s);
            }
        }
    }
    out.into_iter().collect()
}

/// All extensions of `s` under which `pat` is congruent to `t`.
fn match_term(store: &Store, eg: &EGraph, pat: TermId, t: TermId, s: Subst) -> Vec<Subst> {
    if store.is_var(pat) {
        return match s.get(pat) {
            Some(v) if eg.are_equal(v, t) => vec![s],
            Some(_) => vec![],
            None => {
                let mut s = s;
                s.insert(store, pat, eg.rep(t));
                vec![s]
            }
        };
    }
    if store.is_ground(pat) {
        return if eg.is_registered(pat) && eg.are_equal(pat, t) { vec![s] } else { vec![] };
    }
    let (f, pargs) = store.as_app(pat).expect("patterns are applications or variables");
    let mut out = Vec::new();
    for m in eg.class_members(t) {
        let Some((g, args)) = store.as_app(m) else { continue };
        if g != f {
            continue;
        }
        let mut partial = vec![s.clone()];
        for (&p, &a) in pargs.iter().zip(args) {
            partial = partial.into_iter().flat_map(|s| match_term(store, eg, p, a, s)).collect();
            if partial.is_empty() {
                break;
            }
        }
        out.extend(partial);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum InstMode {
    Exhaustive,
    #[default]
    Mbqi,
    MbqiEmatch,
    ExhaustiveEmatch,
}

/// Instances of `q` to add this round; `done` holds instances already added.
/// An empty result certifies that the model satisfies `q`.
pub fn choose_instances(
    mode: InstMode,
    ev: &Evaluator,
    store: &Store,
    q: &QuantRecord,
    eg: &EGraph,
    done: &HashSet<Subst>,
    cap: usize,
) -> Vec<Subst> {
    if matches!(mode, InstMode::MbqiEmatch | InstMode::ExhaustiveEmatch) {
        let mut found: Vec<Subst> = e_match(store, q, eg).into_iter().filter(|s| !done.contains(s)).collect();
        if cap != 0 {
            found.truncate(cap);
        }
        if !found.is_empty() {
            return found;
        }
    }
    match mode {
        InstMode::Mbqi | InstMode::MbqiEmatch => h_m(ev, store, q, cap),
        InstMode::Exhaustive | InstMode::ExhaustiveEmatch => {
            let mut all: Vec<Subst> = exhaustive(ev.model, store, q).into_iter().filter(|s| !done.contains(s)).collect();
            if cap != 0 {
                all.truncate(cap);
            }
            all
        }
    }
}
