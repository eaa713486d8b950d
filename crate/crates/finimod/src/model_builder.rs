//! Candidate models built from a consistent congruence closure.
//!
//! Each uninterpreted sort is interpreted by the representatives of its
//! classes. Each function gets a defining map: a list of patterns over
//! domain values and pattern variables `y_i`, each with a value. A ground
//! application takes the value of its most specific generalization.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::euf_cc::EGraph;
use crate::kernel::{FuncId, Node, Origin, SortId, Store, TermId, BOOL};

/// One argument position of a pattern: a domain value or the variable `y_i`.
pub type Pattern = Vec<Option<TermId>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefiningMap {
    pub func: FuncId,
    pub entries: Vec<(Pattern, TermId)>,
}

impl DefiningMap {
    /// Value of the most specific entry matching `args`.
    pub fn lookup(&self, args: &[TermId]) -> Option<TermId> {
        self.entries
            .iter()
            .filter(|(p, _)| generalizes(p, args))
            .max_by_key(|(p, _)| p.iter().filter(|x| x.is_some()).count())
            .map(|(_, v)| *v)
    }
}

fn generalizes(p: &[Option<TermId>], args: &[TermId]) -> bool {
    p.iter().zip(args).all(|(x, a)| x.is_none_or(|v| v == *a))
}

/// Most general common instance of two patterns, if they unify.
pub fn unify(p: &[Option<TermId>], q: &[Option<TermId>]) -> Option<Pattern> {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| match (a, b) {
            (Some(x), Some(y)) if x != y => None,
            (Some(x), _) | (_, Some(x)) => Some(Some(x)),
            (None, None) => Some(None),
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct CandidateModel {
    /// `V_S` in the order used by tuple enumeration.
    pub domains: BTreeMap<SortId, Vec<TermId>>,
    /// The distinguished term `e^S` per sort.
    pub default_terms: BTreeMap<SortId, TermId>,
    pub maps: BTreeMap<FuncId, DefiningMap>,
    t_true: TermId,
    t_false: TermId,
}

impl CandidateModel {
    /// A model given directly by its domains and maps; `e^S` is the first
    /// element of each domain.
    pub fn from_parts(
        store: &Store,
        domains: BTreeMap<SortId, Vec<TermId>>,
        maps: BTreeMap<FuncId, DefiningMap>,
    ) -> CandidateModel {
        let (t_true, t_false) = (store.t_true(), store.t_false());
        let default_terms = domains.iter().filter_map(|(&s, d)| d.first().map(|&e| (s, e))).collect();
        let mut domains = domains;
        domains.insert(BOOL, vec![t_false, t_true]);
        CandidateModel { domains, default_terms, maps, t_true, t_false }
    }

    pub fn domain(&self, s: SortId) -> &[TermId] {
        self.domains.get(&s).map_or(&[], |v| v.as_slice())
    }

    pub fn t_true(&self) -> TermId {
        self.t_true
    }

    pub fn t_false(&self) -> TermId {
        self.t_false
    }

    pub fn bool_value(&self, b: bool) -> TermId {
        if b {
            self.t_true
        } else {
            self.t_false
        }
    }

    /// Value of `f` applied to domain values.
    pub fn apply(&self, f: FuncId, args: &[TermId]) -> TermId {
        let m = self.maps.get(&f).unwrap_or_else(|| panic!("no interpretation for function {}", f.0));
        m.lookup(args).expect("defining map without a total entry")
    }

    /// Evaluates a closed term or formula bottom-up.
    pub fn eval_ground(&self, store: &Store, t: TermId) -> TermId {
        self.eval_with(store, t, &mut HashMap::new())
    }

    fn eval_with(&self, store: &Store, t: TermId, env: &mut HashMap<TermId, TermId>) -> TermId {
        match store.node(t) {
            Node::Var { name, .. } => *env.get(&t).unwrap_or_else(|| panic!("unbound variable {name}")),
            Node::App { func, args } => {
                if t == self.t_true || t == self.t_false {
                    return t;
                }
                let vals: Vec<TermId> = args.iter().map(|&a| self.eval_with(store, a, env)).collect();
                self.apply(*func, &vals)
            }
            Node::Eq(a, b) => {
                let (va, vb) = (self.eval_with(store, *a, env), self.eval_with(store, *b, env));
                self.bool_value(va == vb)
            }
            Node::Not(a) => {
                let v = self.eval_with(store, *a, env);
                self.bool_value(v == self.t_false)
            }
            Node::And(args) => {
                let all = args.iter().all(|&a| self.eval_with(store, a, env) == self.t_true);
                self.bool_value(all)
            }
            Node::Or(args) => {
                let any = args.iter().any(|&a| self.eval_with(store, a, env) == self.t_true);
                self.bool_value(any)
            }
            Node::Forall { vars, body } => {
                let doms: Vec<Vec<TermId>> = vars.iter().map(|&v| self.domain(store.sort(v)).to_vec()).collect();
                let saved: Vec<Option<TermId>> = vars.iter().map(|v| env.get(v).copied()).collect();
                let mut ok = true;
                for_each_tuple(&doms, |tuple| {
                    for (&x, &v) in vars.iter().zip(tuple) {
                        env.insert(x, v);
                    }
                    ok = self.eval_with(store, *body, env) == self.t_true;
                    ok
                });
                for (&x, old) in vars.iter().zip(saved) {
                    match old {
                        Some(v) => env.insert(x, v),
                        None => env.remove(&x),
                    };
                }
                self.bool_value(ok)
            }
        }
    }

    /// `sort S : card k : {…}` lines followed by one line per map entry.
    pub fn render(&self, store: &Store) -> String {
        let mut out = String::new();
        for (&s, dom) in &self.domains {
            if s == BOOL {
                continue;
            }
            let names: Vec<String> = dom.iter().map(|&v| store.display(v)).collect();
            let _ = writeln!(out, "sort {} : card {} : {{{}}}", store.sort_name(s), dom.len(), names.join(", "));
        }
        for (&f, m) in &self.maps {
            let decl = store.func(f);
            if decl.origin != Origin::User {
                continue;
            }
            for (p, v) in &m.entries {
                let lhs = if p.is_empty() {
                    decl.name.clone()
                } else {
                    let args: Vec<String> =
                        p.iter().map(|x| x.map_or_else(|| "_".to_string(), |v| store.display(v))).collect();
                    format!("{}({})", decl.name, args.join(","))
                };
                let _ = writeln!(out, "{lhs} = {}", store.display(*v));
            }
        }
        out
    }
}

/// Calls `f` on every tuple of the product in lexicographic order until it
/// returns false.
pub fn for_each_tuple(doms: &[Vec<TermId>], mut f: impl FnMut(&[TermId]) -> bool) {
    if doms.iter().any(|d| d.is_empty()) {
        return;
    }
    let mut idx = vec![0usize; doms.len()];
    let mut cur: Vec<TermId> = doms.iter().map(|d| d[0]).collect();
    loop {
        if !f(&cur) {
            return;
        }
        let mut j = doms.len();
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < doms[j].len() {
                cur[j] = doms[j][idx[j]];
                break;
            }
            idx[j] = 0;
            cur[j] = doms[j][0];
        }
    }
}

/// Problems found by [`validate_defining_map`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MapViolation {
    /// Two entries share a pattern but disagree on the value.
    Conflicting(Pattern),
    /// Two unifiable entries whose common instance has no entry.
    MissingInstance(Pattern, Pattern),
    /// No all-variable entry.
    NoDefault,
    /// A flat term without a unique most specific generalization.
    Ambiguous(Vec<TermId>),
}

/// Checks the defining-map conditions; msg uniqueness is checked by
/// enumerating `domains` (one per argument) when given.
pub fn validate_defining_map(m: &DefiningMap, domains: Option<&[Vec<TermId>]>) -> Vec<MapViolation> {
    let mut out = Vec::new();
    let lhs: HashMap<&Pattern, TermId> = m.entries.iter().map(|(p, v)| (p, *v)).collect();
    for (i, (p, v)) in m.entries.iter().enumerate() {
        for (q, w) in &m.entries[i + 1..] {
            if p == q {
                if v != w {
                    out.push(MapViolation::Conflicting(p.clone()));
                }
                continue;
            }
            if let Some(u) = unify(p, q) {
                if !lhs.contains_key(&u) {
                    out.push(MapViolation::MissingInstance(p.clone(), q.clone()));
                }
            }
        }
    }
    let arity = m.entries.first().map_or(usize::MAX, |(p, _)| p.len());
    if !m.entries.iter().any(|(p, _)| p.iter().all(|x| x.is_none())) {
        out.push(MapViolation::NoDefault);
    }
    if let Some(doms) = domains {
        if arity == usize::MAX || doms.len() == arity {
            for_each_tuple(doms, |args| {
                let gens: Vec<&Pattern> = m.entries.iter().map(|(p, _)| p).filter(|p| generalizes(p, args)).collect();
                let most: Vec<&&Pattern> = gens
                    .iter()
                    .filter(|p| gens.iter().all(|q| q == *p || !generalizes_pattern(p, q)))
                    .collect();
                let mut distinct: Vec<&Pattern> = most.iter().map(|p| **p).collect();
                distinct.dedup();
                if distinct.len() != 1 {
                    out.push(MapViolation::Ambiguous(args.to_vec()));
                }
                true
            });
        }
    }
    out
}

/// `p` generalizes `q` (strictly or not).
fn generalizes_pattern(p: &[Option<TermId>], q: &[Option<TermId>]) -> bool {
    p.iter().zip(q).all(|(a, b)| a.is_none() || a == b)
}

/// Value of a registered term: its representative, or a boolean constant.
fn value_of(store: &Store, eg: &EGraph, t: TermId) -> TermId {
    if store.sort(t) == BOOL {
        if eg.is_registered(store.t_true()) && eg.are_equal(t, store.t_true()) {
            store.t_true()
        } else {
            store.t_false()
        }
    } else {
        eg.rep(t)
    }
}

fn push(entries: &mut Vec<(Pattern, TermId)>, seen: &mut HashMap<Pattern, usize>, p: Pattern, v: TermId) {
    if !seen.contains_key(&p) {
        seen.insert(p.clone(), entries.len());
        entries.push((p, v));
    }
}

/// Builds the candidate model of the current egraph state with `U` equal to
/// every registered term. `sorts` lists the uninterpreted sorts to interpret.
pub fn build_model(store: &Store, eg: &EGraph, sorts: &[SortId]) -> CandidateModel {
    let (t_true, t_false) = (store.t_true(), store.t_false());
    let mut domains: BTreeMap<SortId, Vec<TermId>> = BTreeMap::new();
    let mut default_terms = BTreeMap::new();
    domains.insert(BOOL, vec![t_false, t_true]);
    for &s in sorts {
        domains.insert(s, Vec::new());
    }
    for n in 0..eg.num_nodes() as u32 {
        let s = eg.node_sort(n);
        if s == BOOL {
            continue;
        }
        let t = eg.term(n);
        let e = default_terms.entry(s).or_insert(t);
        if t < *e {
            *e = t;
        }
        if eg.rep_node(n) == n {
            domains.entry(s).or_default().push(t);
        }
    }
    let terms = eg.terms().to_vec();
    let mut maps = BTreeMap::new();
    for f in store.funcs() {
        let decl = store.func(f);
        if decl.origin == Origin::Builtin {
            continue;
        }
        if decl.args.iter().chain([&decl.ret]).any(|s| !domains.contains_key(s)) {
            continue;
        }
        let apps: Vec<(TermId, Vec<TermId>)> = terms
            .iter()
            .filter_map(|&t| match store.as_app(t) {
                Some((g, args)) if g == f => Some((t, args.to_vec())),
                _ => None,
            })
            .collect();
        let mut entries: Vec<(Pattern, TermId)> = Vec::new();
        let mut seen: HashMap<Pattern, usize> = HashMap::new();
        for (t, args) in &apps {
            let p = args.iter().map(|&a| Some(value_of(store, eg, a))).collect();
            push(&mut entries, &mut seen, p, value_of(store, eg, *t));
        }
        for (t, args) in &apps {
            let p = args
                .iter()
                .map(|&a| {
                    let s = store.sort(a);
                    if default_terms.get(&s) == Some(&a) {
                        None
                    } else {
                        Some(value_of(store, eg, a))
                    }
                })
                .collect();
            push(&mut entries, &mut seen, p, value_of(store, eg, *t));
        }
        // Close under pairwise unification, earlier entry's value first.
        let mut j = 1;
        while j < entries.len() {
            for i in 0..j {
                if let Some(u) = unify(&entries[i].0, &entries[j].0) {
                    let v = entries[i].1;
                    push(&mut entries, &mut seen, u, v);
                }
            }
            j += 1;
        }
        let total: Pattern = vec![None; decl.arity()];
        if !seen.contains_key(&total) {
            let v = if decl.ret == BOOL {
                t_false
            } else if let Some(&e) = default_terms.get(&decl.ret) {
                eg.rep(e)
            } else {
                match domains[&decl.ret].first() {
                    Some(&v) => v,
                    None => continue,
                }
            };
            push(&mut entries, &mut seen, total, v);
        }
        maps.insert(f, DefiningMap { func: f, entries });
    }
    CandidateModel { domains, default_terms, maps, t_true, t_false }
}
