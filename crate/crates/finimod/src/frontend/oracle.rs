//! Reference answers for testing: brute-force model enumeration over small
//! domains, and the recursive splitting procedure for ground literal sets.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::kernel::{Atom, CardScope, FuncId, Lit, Node, Origin, SortId, Store, TermId, BOOL};
use crate::purifier::PurifiedProblem;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    /// First satisfying cardinalities in ladder order, per sort in id order.
    Sat(Vec<(SortId, u32)>),
    /// No model with total cardinality up to the bound.
    UnsatUpTo(u32),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("too many interpretations to enumerate at cardinalities {0:?}")]
    TooLarge(Vec<u32>),
}

/// A formula compiled against one cardinality vector. Elements are
/// indices; Bool is {0 = false, 1 = true}.
enum Code {
    Const(u32),
    Var(usize),
    /// Table lookup at `off` indexed by the argument values.
    App { off: usize, rad: Vec<u32>, args: Vec<Code> },
    Eq(Box<Code>, Box<Code>),
    Not(Box<Code>),
    And(Vec<Code>),
    Or(Vec<Code>),
    Forall { slots: Vec<(usize, u32)>, body: Box<Code> },
}

/// Marks a table cell nothing has read yet.
const UNSET: u32 = u32::MAX;

impl Code {
    /// Value under a partial table, or the first unset cell it needs.
    fn run(&self, table: &[u32], env: &mut [u32]) -> Result<u32, usize> {
        Ok(match self {
            Code::Const(v) => *v,
            Code::Var(i) => env[*i],
            Code::App { off, rad, args } => {
                let mut idx = 0usize;
                for (a, r) in args.iter().zip(rad) {
                    idx = idx * *r as usize + a.run(table, env)? as usize;
                }
                match table[off + idx] {
                    UNSET => return Err(off + idx),
                    v => v,
                }
            }
            Code::Eq(a, b) => (a.run(table, env)? == b.run(table, env)?) as u32,
            Code::Not(a) => 1 - a.run(table, env)?,
            Code::And(xs) => {
                for x in xs {
                    if x.run(table, env)? == 0 {
                        return Ok(0);
                    }
                }
                1
            }
            Code::Or(xs) => {
                for x in xs {
                    if x.run(table, env)? == 1 {
                        return Ok(1);
                    }
                }
                0
            }
            Code::Forall { slots, body } => Self::forall(slots, body, table, env)? as u32,
        })
    }

    fn forall(slots: &[(usize, u32)], body: &Code, table: &[u32], env: &mut [u32]) -> Result<bool, usize> {
        let Some((&(i, n), rest)) = slots.split_first() else {
            return Ok(body.run(table, env)? == 1);
        };
        for v in 0..n {
            env[i] = v;
            if !Self::forall(rest, body, table, env)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}


/// Table layout of the enumerated symbols at one cardinality vector.
struct Layout<'a> {
    store: &'a Store,
    size: HashMap<SortId, u32>,
    funcs: HashMap<FuncId, (Vec<u32>, usize)>,
    radix: Vec<u32>,
    slots: HashMap<TermId, usize>,
}

impl<'a> Layout<'a> {
    fn new(store: &'a Store, funcs: &[FuncId], size: HashMap<SortId, u32>) -> Layout<'a> {
        let mut layout = HashMap::new();
        let mut radix = Vec::new();
        for &f in funcs {
            let d = store.func(f);
            let rad: Vec<u32> = d.args.iter().map(|s| size[s]).collect();
            let cells: usize = rad.iter().map(|&r| r as usize).product();
            layout.insert(f, (rad, radix.len()));
            radix.extend(std::iter::repeat_n(size[&d.ret], cells));
        }
        Layout { store, size, funcs: layout, radix, slots: HashMap::new() }
    }


    fn slot(&mut self, v: TermId) -> usize {
        let n = self.slots.len();
        *self.slots.entry(v).or_insert(n)
    }

    fn term(&mut self, t: TermId) -> Code {
        let st = self.store;
        match st.node(t) {
            Node::Var { .. } => Code::Var(self.slot(t)),
            Node::App { func, args } => {
                if t == st.t_true() {
                    return Code::Const(1);
                }
                if t == st.t_false() {
                    return Code::Const(0);
                }
                let (rad, off) = self.funcs[func].clone();
                Code::App { off, rad, args: args.iter().map(|&a| self.term(a)).collect() }
            }
            Node::Eq(a, b) => Code::Eq(Box::new(self.term(*a)), Box::new(self.term(*b))),
            Node::Not(a) => Code::Not(Box::new(self.term(*a))),
            Node::And(xs) => Code::And(xs.iter().map(|&x| self.term(x)).collect()),
            Node::Or(xs) => Code::Or(xs.iter().map(|&x| self.term(x)).collect()),
            Node::Forall { vars, body } => {
                let slots = vars.iter().map(|&v| (self.slot(v), self.size[&st.sort(v)])).collect();
                Code::Forall { slots, body: Box::new(self.term(*body)) }
            }
        }
    }

    fn lit(&mut self, l: Lit) -> Code {
        let c = match self.store.atom(l.atom()) {
            Atom::Eq(a, b) => Code::Eq(Box::new(self.term(a)), Box::new(self.term(b))),
            Atom::Card(CardScope::Sort(s), k) => Code::Const((self.size[&s] <= k) as u32),
            Atom::Card(CardScope::Signature, k) => {
                let total: u32 = self.size.iter().filter(|(&s, _)| s != BOOL).map(|(_, &n)| n).sum();
                Code::Const((total <= k) as u32)
            }
        };
        if l.is_pos() {
            c
        } else {
            Code::Not(Box::new(c))
        }
    }
}

fn collect(store: &Store, t: TermId, sorts: &mut BTreeSet<SortId>, funcs: &mut BTreeSet<FuncId>) {
    let s = store.sort(t);
    if s != BOOL {
        sorts.insert(s);
    }
    match store.node(t) {
        Node::Var { .. } => {}
        Node::App { func, args } => {
            if store.func(*func).origin != Origin::Builtin {
                funcs.insert(*func);
            }
            for &a in args {
                collect(store, a, sorts, funcs);
            }
        }
        Node::Eq(a, b) => {
            collect(store, *a, sorts, funcs);
            collect(store, *b, sorts, funcs);
        }
        Node::Not(a) => collect(store, *a, sorts, funcs),
        Node::And(xs) | Node::Or(xs) => xs.iter().for_each(|&x| collect(store, x, sorts, funcs)),
        Node::Forall { vars, body } => {
            for &v in vars {
                sorts.insert(store.sort(v));
            }
            collect(store, *body, sorts, funcs);
        }
    }
}

/// Cardinality vectors with the given total, smallest first sort first.
fn vectors(n: usize, total: u32) -> Vec<Vec<u32>> {
    if n == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    if n == 1 {
        return if total >= 1 { vec![vec![total]] } else { vec![] };
    }
    let mut out = Vec::new();
    for k in 1..=total.saturating_sub(n as u32 - 1) {
        for mut rest in vectors(n - 1, total - k) {
            rest.insert(0, k);
            out.push(rest);
        }
    }
    out
}

/// Exhaustive search over interpretations of the used symbols, in ladder
/// order of cardinalities. Cells are assigned in the order evaluation reads
/// them, so each leaf covers every table agreeing on the cells read.
/// `limit` caps the search nodes per cardinality vector.
fn search(
    store: &Store,
    sorts: &[SortId],
    funcs: &[FuncId],
    max_card: u32,
    limit: f64,
    compile: impl Fn(&mut Layout) -> Vec<Code>,
) -> Result<OracleVerdict, OracleError> {
    let totals: Vec<u32> = if sorts.is_empty() { vec![0] } else { (sorts.len() as u32..=max_card).collect() };
    for total in totals {
        for ks in vectors(sorts.len(), total) {
            let mut size: HashMap<SortId, u32> = sorts.iter().copied().zip(ks.iter().copied()).collect();
            size.insert(BOOL, 2);
            let mut lay = Layout::new(store, funcs, size);
            let code = compile(&mut lay);
            let mut s = Lazy { code: &code, radix: &lay.radix, table: vec![UNSET; lay.radix.len()], env: vec![0; lay.slots.len()], nodes: 0.0, limit };
            match s.dfs(0) {
                Some(true) => return Ok(OracleVerdict::Sat(sorts.iter().copied().zip(ks).collect())),
                Some(false) => {}
                None => return Err(OracleError::TooLarge(ks)),
            }
        }
    }
    Ok(OracleVerdict::UnsatUpTo(max_card))
}

struct Lazy<'a> {
    code: &'a [Code],
    radix: &'a [u32],
    table: Vec<u32>,
    env: Vec<u32>,
    nodes: f64,
    limit: f64,
}

impl Lazy<'_> {
    /// Constraints before `from` already hold under the current cells and
    /// keep holding as more cells get values. None when over budget.
    fn dfs(&mut self, from: usize) -> Option<bool> {
        self.nodes += 1.0;
        if self.nodes > self.limit {
            return None;
        }
        for i in from..self.code.len() {
            match self.code[i].run(&self.table, &mut self.env) {
                Ok(1) => {}
                Ok(_) => return Some(false),
                Err(cell) => {
                    for v in 0..self.radix[cell] {
                        self.table[cell] = v;
                        if self.dfs(i)? {
                            return Some(true);
                        }
                    }
                    self.table[cell] = UNSET;
                    return Some(false);
                }
            }
        }
        Some(true)
    }
}

/// Brute force over a purified problem: every clause holds and every
/// proxy is equivalent to its quantified formula. `limit` caps the search
/// nodes per cardinality vector.
pub fn oracle_solve(store: &Store, p: &PurifiedProblem, max_card: u32, limit: f64) -> Result<OracleVerdict, OracleError> {
    let (mut sorts, mut funcs) = (BTreeSet::new(), BTreeSet::new());
    for c in &p.clauses {
        for l in c {
            match store.atom(l.atom()) {
                Atom::Eq(a, b) => {
                    collect(store, a, &mut sorts, &mut funcs);
                    collect(store, b, &mut sorts, &mut funcs);
                }
                Atom::Card(CardScope::Sort(s), _) => {
                    sorts.insert(s);
                }
                Atom::Card(CardScope::Signature, _) => {}
            }
        }
    }
    for r in &p.records {
        funcs.insert(r.proxy);
        collect(store, r.formula, &mut sorts, &mut funcs);
    }
    sorts.extend(store.uninterpreted_sorts());
    let sorts: Vec<SortId> = sorts.into_iter().collect();
    let funcs: Vec<FuncId> = funcs.into_iter().collect();
    search(store, &sorts, &funcs, max_card, limit, |lay| {
        let mut code: Vec<Code> = p.clauses.iter().map(|c| Code::Or(c.iter().map(|&l| lay.lit(l)).collect())).collect();
        for r in &p.records {
            code.push(Code::Eq(Box::new(lay.lit(r.lit)), Box::new(lay.term(r.formula))));
        }
        code
    })
}

/// Brute force over closed formulas as given, without purification.
pub fn oracle_formulas(store: &Store, assertions: &[TermId], max_card: u32, limit: f64) -> Result<OracleVerdict, OracleError> {
    let (mut sorts, mut funcs) = (BTreeSet::new(), BTreeSet::new());
    for &a in assertions {
        collect(store, a, &mut sorts, &mut funcs);
    }
    sorts.extend(store.uninterpreted_sorts());
    let sorts: Vec<SortId> = sorts.into_iter().collect();
    let funcs: Vec<FuncId> = funcs.into_iter().collect();
    search(store, &sorts, &funcs, max_card, limit, |lay| assertions.iter().map(|&a| lay.term(a)).collect())
}

/// Naive congruence closure over a fixed term set, by fixpoint iteration.
struct Closure<'a> {
    store: &'a Store,
    terms: Vec<TermId>,
    parent: HashMap<TermId, TermId>,
}

impl<'a> Closure<'a> {
    fn new(store: &'a Store, terms: &[TermId]) -> Closure<'a> {
        Closure { store, terms: terms.to_vec(), parent: terms.iter().map(|&t| (t, t)).collect() }
    }

    fn find(&self, mut t: TermId) -> TermId {
        while self.parent[&t] != t {
            t = self.parent[&t];
        }
        t
    }

    fn union(&mut self, a: TermId, b: TermId) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent.insert(ra, rb);
        true
    }

    fn close(&mut self) {
        let apps: Vec<(TermId, FuncId, Vec<TermId>)> = self
            .terms
            .iter()
            .filter_map(|&t| self.store.as_app(t).map(|(f, a)| (t, f, a.to_vec())))
            .filter(|(_, _, a)| !a.is_empty())
            .collect();
        loop {
            let mut changed = false;
            for i in 0..apps.len() {
                for j in i + 1..apps.len() {
                    let ((s, f, a), (t, g, b)) = (&apps[i], &apps[j]);
                    if f == g && a.iter().zip(b).all(|(&x, &y)| self.find(x) == self.find(y)) {
                        changed |= self.union(*s, *t);
                    }
                }
            }
            if !changed {
                return;
            }
        }
    }
}

/// Literals as (equal?, s, t) over uninterpreted-sort or Bool terms.
type EqLit = (bool, TermId, TermId);

/// The recursive split procedure on a set of ground literals, extended to
/// several sorts by splitting in any sort that has too many classes.
pub fn oracle_fcc(store: &Store, lits: &[Lit]) -> bool {
    let mut eqs: Vec<EqLit> = Vec::new();
    let mut terms = vec![store.t_true(), store.t_false()];
    let mut pos_card: HashMap<SortId, u32> = HashMap::new();
    let mut neg_card: HashMap<SortId, u32> = HashMap::new();
    let mut sig: (Option<u32>, Option<u32>) = (None, None);
    for &l in lits {
        match store.atom(l.atom()) {
            Atom::Eq(a, b) => {
                store.ground_subterms(a, &mut terms);
                store.ground_subterms(b, &mut terms);
                eqs.push((l.is_pos(), a, b));
            }
            Atom::Card(CardScope::Sort(s), k) => {
                let m = if l.is_pos() { &mut pos_card } else { &mut neg_card };
                let e = m.entry(s).or_insert(k);
                *e = if l.is_pos() { (*e).min(k) } else { (*e).max(k) };
            }
            Atom::Card(CardScope::Signature, k) => {
                if l.is_pos() {
                    sig.0 = Some(sig.0.map_or(k, |x| x.min(k)));
                } else {
                    sig.1 = Some(sig.1.map_or(k, |x| x.max(k)));
                }
            }
        }
    }
    assert!(sig == (None, None), "signature cardinality literals are not handled by the split procedure");
    terms.sort();
    terms.dedup();
    eqs.push((false, store.t_true(), store.t_false()));
    fcc_rec(store, &terms, &mut eqs, &pos_card, &neg_card)
}

fn fcc_rec(
    store: &Store,
    terms: &[TermId],
    eqs: &mut Vec<EqLit>,
    pos_card: &HashMap<SortId, u32>,
    neg_card: &HashMap<SortId, u32>,
) -> bool {
    let cc = closure_of(store, terms, eqs);
    if eqs.iter().any(|&(p, s, t)| !p && cc.find(s) == cc.find(t)) {
        return false;
    }
    if pos_card.is_empty() {
        return true;
    }
    for (s, &k) in pos_card {
        if neg_card.get(s).is_some_and(|&j| j >= k) {
            return false;
        }
    }
    // Pick a sort whose class count exceeds its bound.
    let over = pos_card.iter().find(|(&s, &k)| {
        let classes: BTreeSet<TermId> = terms.iter().filter(|&&t| store.sort(t) == s).map(|&t| cc.find(t)).collect();
        classes.len() > k as usize
    });
    let Some((&s, _)) = over else {
        return true;
    };
    let of_s: Vec<TermId> = terms.iter().copied().filter(|&t| store.sort(t) == s).collect();
    for i in 0..of_s.len() {
        for j in i + 1..of_s.len() {
            let (a, b) = (of_s[i], of_s[j]);
            if cc.find(a) == cc.find(b) {
                continue;
            }
            // Skip pairs whose disequality is already entailed.
            eqs.push((true, a, b));
            let cc2 = closure_of(store, terms, eqs);
            let entailed = eqs.iter().any(|&(p, x, y)| !p && cc2.find(x) == cc2.find(y));
            eqs.pop();
            if entailed {
                continue;
            }
            for eq in [true, false] {
                eqs.push((eq, a, b));
                let r = fcc_rec(store, terms, eqs, pos_card, neg_card);
                eqs.pop();
                if r {
                    return true;
                }
            }
            return false;
        }
    }
    false
}

fn closure_of<'a>(store: &'a Store, terms: &[TermId], eqs: &[EqLit]) -> Closure<'a> {
    let mut cc = Closure::new(store, terms);
    for &(p, s, t) in eqs {
        if p {
            cc.union(s, t);
        }
    }
    cc.close();
    cc
}
