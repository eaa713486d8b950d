//! Random problem and model generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use finimod::fcc_solver::regions::RegionGraph;
use finimod::fmf_driver::{solve, SolveResult, SolverConfig};
use finimod::kernel::{CardScope, FuncId, Lit, SortId, Store, Subst, TermId, BOOL};
use finimod::model_builder::{validate_defining_map, CandidateModel, DefiningMap};
use finimod::purifier::{PurifiedProblem, QuantRecord};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---- ground literal sets ----

pub struct GroundCase {
    pub store: Store,
    pub lits: Vec<Lit>,
    pub sorts: Vec<SortId>,
    /// Total cardinality up to which a satisfiable set must have a model.
    pub card_bound: u32,
}

/// At most six distinct terms over one or two sorts, equalities and
/// disequalities between them, and up to two cardinality literals with
/// bounds at most three.
pub fn ground_case(r: &mut Rng8) -> GroundCase {
    let mut st = Store::new();
    let nsorts = r.gen_range(1..=2);
    let sorts: Vec<SortId> = (0..nsorts).map(|i| st.declare_sort(&format!("S{i}")).unwrap()).collect();
    let mut pool: Vec<TermId> = Vec::new();
    for (i, &s) in sorts.iter().enumerate() {
        let n = if i == 0 { r.gen_range(1..=3) } else { r.gen_range(1..=2) };
        for j in 0..n {
            let c = st.declare_fun(&format!("c{i}_{j}"), vec![], s).unwrap();
            pool.push(st.app(c, &[]));
        }
    }
    let f = st.declare_fun("f", vec![sorts[0]], sorts[0]).unwrap();
    let g = st.declare_fun("g", vec![sorts[0]], *sorts.last().unwrap()).unwrap();
    while pool.len() < 6 && r.gen_bool(0.6) {
        let args: Vec<TermId> = pool.iter().copied().filter(|&t| st.sort(t) == sorts[0]).collect();
        let a = *args.choose(r).unwrap();
        let t = st.app(if r.gen_bool(0.5) { f } else { g }, &[a]);
        if !pool.contains(&t) {
            pool.push(t);
        }
    }
    let mut lits = Vec::new();
    for _ in 0..r.gen_range(1..=6) {
        let s = *sorts.choose(r).unwrap();
        let of_s: Vec<TermId> = pool.iter().copied().filter(|&t| st.sort(t) == s).collect();
        if of_s.len() < 2 {
            continue;
        }
        let two: Vec<TermId> = of_s.choose_multiple(r, 2).copied().collect();
        lits.push(st.eq_lit(two[0], two[1], r.gen_bool(0.4)));
    }
    for _ in 0..r.gen_range(0..=2) {
        let s = *sorts.choose(r).unwrap();
        lits.push(st.card_lit(CardScope::Sort(s), r.gen_range(1..=3), r.gen_bool(0.5)));
    }
    if lits.is_empty() {
        lits.push(st.card_lit(CardScope::Sort(sorts[0]), r.gen_range(1..=3), true));
    }
    // A satisfiable set has a model with each sort no larger than its term
    // count or one past its largest negated bound, capped by its tightest
    // positive bound.
    let mut card_bound = 0;
    for &s in &sorts {
        let mut terms: Vec<TermId> = Vec::new();
        let mut neg = 0;
        let mut pos = u32::MAX;
        for &l in &lits {
            match st.atom(l.atom()) {
                finimod::kernel::Atom::Eq(a, b) if st.sort(a) == s => {
                    st.ground_subterms(a, &mut terms);
                    st.ground_subterms(b, &mut terms);
                }
                finimod::kernel::Atom::Eq(a, b) => {
                    let mut sub = Vec::new();
                    st.ground_subterms(a, &mut sub);
                    st.ground_subterms(b, &mut sub);
                    terms.extend(sub.into_iter().filter(|&t| st.sort(t) == s));
                }
                finimod::kernel::Atom::Card(CardScope::Sort(t), k) if t == s => {
                    if l.is_pos() {
                        pos = pos.min(k);
                    } else {
                        neg = neg.max(k);
                    }
                }
                _ => {}
            }
        }
        terms.retain(|&t| st.sort(t) == s);
        terms.sort();
        terms.dedup();
        card_bound += (terms.len() as u32).max(neg + 1).min(pos).max(1);
    }
    GroundCase { store: st, lits, sorts, card_bound }
}

pub fn unit_problem(lits: &[Lit]) -> PurifiedProblem {
    let mut p = PurifiedProblem::new();
    p.clauses = lits.iter().map(|&l| vec![l]).collect();
    p
}

// ---- random formulas ----

/// Symbols of the random signature: one sort `S`, optionally a second
/// sort `T` reached through `h`.
#[derive(Clone)]
pub struct Sig {
    pub s: SortId,
    pub t: Option<SortId>,
    pub consts: Vec<TermId>,
    pub t_consts: Vec<TermId>,
    pub f: FuncId,
    pub g: FuncId,
    pub p: FuncId,
    pub r: FuncId,
    pub h: Option<FuncId>,
}

impl Sig {
    pub fn new(st: &mut Store, nconsts: usize, two_sorts: bool) -> Sig {
        let s = st.declare_sort("S").unwrap();
        let consts = (0..nconsts)
            .map(|i| {
                let c = st.declare_fun(&format!("c{i}"), vec![], s).unwrap();
                st.app(c, &[])
            })
            .collect();
        let f = st.declare_fun("f", vec![s], s).unwrap();
        let g = st.declare_fun("g", vec![s, s], s).unwrap();
        let p = st.declare_fun("P", vec![s], BOOL).unwrap();
        let r = st.declare_fun("R", vec![s, s], BOOL).unwrap();
        let (t, t_consts, h) = if two_sorts {
            let t = st.declare_sort("T").unwrap();
            let d = st.declare_fun("d", vec![], t).unwrap();
            let h = st.declare_fun("h", vec![s], t).unwrap();
            (Some(t), vec![st.app(d, &[])], Some(h))
        } else {
            (None, vec![], None)
        };
        Sig { s, t, consts, t_consts, f, g, p, r, h }
    }
}

pub struct FormulaGen<'a> {
    pub sig: &'a Sig,
    /// Use the binary function `g` (makes brute force enumeration costly).
    pub binary: bool,
    pub nested: bool,
    pub next_var: usize,
}

impl FormulaGen<'_> {
    pub fn term(&self, st: &mut Store, r: &mut Rng8, vars: &[TermId], depth: u32) -> TermId {
        let leaf = depth == 0 || r.gen_bool(0.55);
        if leaf {
            if !vars.is_empty() && r.gen_bool(0.6) {
                return *vars.choose(r).unwrap();
            }
            return *self.sig.consts.choose(r).unwrap();
        }
        if self.binary && r.gen_bool(0.3) {
            let a = self.term(st, r, vars, depth - 1);
            let b = self.term(st, r, vars, depth - 1);
            return st.app(self.sig.g, &[a, b]);
        }
        let a = self.term(st, r, vars, depth - 1);
        st.app(self.sig.f, &[a])
    }

    pub fn atom(&self, st: &mut Store, r: &mut Rng8, vars: &[TermId]) -> TermId {
        match r.gen_range(0..4) {
            0 => {
                let a = self.term(st, r, vars, 1);
                st.app(self.sig.p, &[a])
            }
            1 => {
                let a = self.term(st, r, vars, 1);
                let b = self.term(st, r, vars, 0);
                st.app(self.sig.r, &[a, b])
            }
            2 if self.sig.h.is_some() => {
                let a = self.term(st, r, vars, 1);
                let ha = st.app(self.sig.h.unwrap(), &[a]);
                let other = if r.gen_bool(0.5) {
                    self.sig.t_consts[0]
                } else {
                    let b = self.term(st, r, vars, 0);
                    st.app(self.sig.h.unwrap(), &[b])
                };
                st.mk_eq(ha, other).unwrap()
            }
            _ => {
                let a = self.term(st, r, vars, 2);
                let b = self.term(st, r, vars, 1);
                st.mk_eq(a, b).unwrap()
            }
        }
    }

    pub fn formula(&mut self, st: &mut Store, r: &mut Rng8, vars: &[TermId], depth: u32) -> TermId {
        if depth == 0 {
            let a = self.atom(st, r, vars);
            return if r.gen_bool(0.4) { st.mk_not(a).unwrap() } else { a };
        }
        match r.gen_range(0..8) {
            0 | 1 => {
                let a = self.formula(st, r, vars, depth - 1);
                let b = self.formula(st, r, vars, depth - 1);
                st.mk_or(vec![a, b]).unwrap()
            }
            2 => {
                let a = self.formula(st, r, vars, depth - 1);
                let b = self.formula(st, r, vars, depth - 1);
                st.mk_and(vec![a, b]).unwrap()
            }
            3 => {
                let a = self.formula(st, r, vars, depth - 1);
                st.mk_not(a).unwrap()
            }
            4 if self.nested => {
                let y = self.fresh_var(st);
                let mut inner = vars.to_vec();
                inner.push(y);
                let b = self.formula(st, r, &inner, depth - 1);
                if r.gen_bool(0.5) {
                    st.mk_exists(vec![y], b).unwrap()
                } else {
                    st.mk_forall(vec![y], b).unwrap()
                }
            }
            _ => self.formula(st, r, vars, 0),
        }
    }

    pub fn fresh_var(&mut self, st: &mut Store) -> TermId {
        self.next_var += 1;
        st.mk_var(&format!("x{}", self.next_var), self.sig.s)
    }

    /// A closed formula `∀x̄ body` (or `∃` when `exists`) with `n` variables.
    pub fn quantified(&mut self, st: &mut Store, r: &mut Rng8, n: usize, exists: bool) -> TermId {
        let vars: Vec<TermId> = (0..n).map(|_| self.fresh_var(st)).collect();
        let body = self.formula(st, r, &vars, 2);
        if exists {
            st.mk_exists(vars, body).unwrap()
        } else {
            st.mk_forall(vars, body).unwrap()
        }
    }
}

/// A random closed problem: a few ground literals and one or two
/// quantified formulas.
pub fn quantified_problem(r: &mut Rng8, binary: bool) -> (Store, Vec<TermId>) {
    let mut st = Store::new();
    let two = r.gen_bool(0.25);
    let sig = Sig::new(&mut st, r.gen_range(1..=3), two);
    let mut gen = FormulaGen { sig: &sig, binary, nested: true, next_var: 0 };
    let mut out = Vec::new();
    for _ in 0..r.gen_range(1..=3) {
        out.push(gen.formula(&mut st, r, &[], 1));
    }
    for _ in 0..r.gen_range(1..=2) {
        let n = r.gen_range(1..=2);
        let ex = r.gen_bool(0.15);
        out.push(gen.quantified(&mut st, r, n, ex));
    }
    (st, out)
}

pub fn purify_all(st: &mut Store, fs: &[TermId]) -> PurifiedProblem {
    let mut p = PurifiedProblem::new();
    for &f in fs {
        p.purify(st, f).unwrap();
    }
    p
}

pub fn run(st: &mut Store, fs: &[TermId], cfg: &SolverConfig) -> (SolveResult, PurifiedProblem) {
    let mut p = purify_all(st, fs);
    let r = solve(st, &mut p, cfg).expect("solver invariant");
    (r, p)
}

// ---- random models ----

pub struct ModelCase {
    pub store: Store,
    pub model: CandidateModel,
    pub sig: Sig,
    pub vars: Vec<TermId>,
    pub body: TermId,
}

impl ModelCase {
    pub fn record(&self) -> QuantRecord {
        QuantRecord { proxy: FuncId(0), lit: Lit(0), vars: self.vars.clone(), body: self.body, formula: self.body }
    }

    pub fn domain(&self) -> &[TermId] {
        self.model.domain(self.sig.s)
    }

    /// Value of `t` under `sigma` by plain substitution and evaluation.
    pub fn ground_value(&mut self, t: TermId, sigma: &Subst) -> TermId {
        let g = self.store.apply_subst(t, sigma);
        self.model.eval_ground(&self.store, g)
    }
}

/// A model with domain size in `1..=4` whose maps use all-variable
/// defaults, specific entries and first-argument generalizations, and a
/// random formula over `nvars` variables.
pub fn model_case(r: &mut Rng8, nvars: usize) -> ModelCase {
    let mut st = Store::new();
    let sig = Sig::new(&mut st, 2, false);
    let n = r.gen_range(1..=4);
    let dom: Vec<TermId> = (0..n)
        .map(|i| {
            let e = st.declare_fun(&format!("e{i}"), vec![], sig.s).unwrap();
            st.app(e, &[])
        })
        .collect();
    let (tt, ff) = (st.t_true(), st.t_false());
    let mut maps = BTreeMap::new();
    for &e in &dom {
        let (f, _) = st.as_app(e).unwrap();
        maps.insert(f, DefiningMap { func: f, entries: vec![(vec![], e)] });
    }
    for &c in &sig.consts {
        let (f, _) = st.as_app(c).unwrap();
        maps.insert(f, DefiningMap { func: f, entries: vec![(vec![], *dom.choose(r).unwrap())] });
    }
    let pick = |r: &mut Rng8, boolean: bool| if boolean { *[tt, ff].choose(r).unwrap() } else { *dom.choose(r).unwrap() };
    for (func, arity, boolean) in [(sig.f, 1, false), (sig.p, 1, true), (sig.g, 2, false), (sig.r, 2, true)] {
        let mut entries: Vec<(Vec<Option<TermId>>, TermId)> = vec![(vec![None; arity], pick(r, boolean))];
        let mut firsts = Vec::new();
        if arity == 2 {
            for &a in &dom {
                if r.gen_bool(0.4) {
                    entries.push((vec![Some(a), None], pick(r, boolean)));
                    firsts.push(a);
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        for _ in 0..r.gen_range(0..=n * arity) {
            let p: Vec<Option<TermId>> = (0..arity).map(|_| Some(*dom.choose(r).unwrap())).collect();
            if seen.insert(p.clone()) {
                entries.push((p, pick(r, boolean)));
            }
        }
        let m = DefiningMap { func, entries };
        let doms = vec![dom.clone(); arity];
        assert!(validate_defining_map(&m, Some(&doms)).is_empty());
        maps.insert(func, m);
    }
    let model = CandidateModel::from_parts(&st, BTreeMap::from([(sig.s, dom)]), maps);
    let mut gen = FormulaGen { sig: &sig, binary: true, nested: r.gen_bool(0.3), next_var: 0 };
    let vars: Vec<TermId> = (0..nvars).map(|_| gen.fresh_var(&mut st)).collect();
    let depth = r.gen_range(1..=3);
    let body = gen.formula(&mut st, r, &vars, depth);
    ModelCase { store: st, model, sig, vars, body }
}

/// Every tuple over `domain` for the given variables.
pub fn all_substs(st: &Store, vars: &[TermId], domain: &[TermId]) -> Vec<Subst> {
    let mut out = vec![Subst::new()];
    for &x in vars {
        let mut next = Vec::new();
        for s in &out {
            for &v in domain {
                let mut s2 = s.clone();
                s2.insert(st, x, v);
                next.push(s2);
            }
        }
        out = next;
    }
    out
}

// ---- region graphs ----

/// Replays random events and checks the region condition, clique
/// containment and undo.
pub fn region_events(seed: u64, steps: usize) -> Result<(), String> {
    let mut r = rng(seed);
    let mut g = RegionGraph::new(r.gen_bool(0.8));
    let mut next = 0u32;
    let mut marks = Vec::new();
    for _ in 0..steps {
        let alive = g.vertices();
        match r.gen_range(0..10) {
            0..=2 if next < 15 => {
                g.add_vertex(next);
                next += 1;
            }
            3..=5 if alive.len() >= 2 => {
                let u = alive[r.gen_range(0..alive.len())];
                let v = alive[r.gen_range(0..alive.len())];
                if u != v {
                    g.add_edge(u, v);
                }
            }
            6 if alive.len() >= 2 => {
                let u = alive[r.gen_range(0..alive.len())];
                let v = alive[r.gen_range(0..alive.len())];
                if u != v {
                    g.merge(u, v);
                }
            }
            7 => g.rebuild(r.gen_range(1..=4)),
            8 => marks.push((g.mark(), g.fingerprint())),
            9 if !marks.is_empty() => {
                let (m, fp) = marks.swap_remove(r.gen_range(0..marks.len()));
                marks.retain(|(m2, _)| *m2 <= m);
                g.undo_to(m);
                if g.fingerprint() != fp {
                    return Err("undo did not restore the fingerprint".into());
                }
            }
            _ => {}
        }
        g.audit()?;
        check_cliques(&g)?;
    }
    Ok(())
}

/// Every clique of size bound+1 lies inside a single region.
pub fn check_cliques(g: &RegionGraph) -> Result<(), String> {
    let Some(k) = g.bound() else { return Ok(()) };
    let p = k as usize + 1;
    let vs = g.vertices();
    fn grow(g: &RegionGraph, vs: &[u32], start: usize, cur: &mut Vec<u32>, p: usize) -> Result<(), String> {
        if cur.len() == p {
            let regions: BTreeSet<u32> = cur.iter().map(|&v| g.region_of(v)).collect();
            return if regions.len() == 1 { Ok(()) } else { Err(format!("clique {cur:?} spans regions")) };
        }
        for i in start..vs.len() {
            if cur.iter().all(|&u| g.adjacent(u, vs[i])) {
                cur.push(vs[i]);
                grow(g, vs, i + 1, cur, p)?;
                cur.pop();
            }
        }
        Ok(())
    }
    grow(g, &vs, 0, &mut Vec::new(), p)
}
