//! Clausification with quantified subformulas treated as atoms.
//!
//! Positive occurrences of `∀x̄ φ` become a boolean proxy constant `a` with
//! the record `a ⇔ ∀x̄ φ`; negative occurrences are replaced by `φ` with the
//! variables mapped to fresh Skolem constants. Bodies of records are kept
//! unprocessed and purified per instance.

use std::collections::HashMap;

use thiserror::Error;

use crate::kernel::{FuncId, Lit, Node, Origin, Store, Subst, TermId, BOOL};

/// Disjunctions whose distribution would exceed this many clauses get a
/// definitional name for their largest argument.
const DISTRIBUTION_LIMIT: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PurifyError {
    #[error("free variable {0} outside any quantifier")]
    FreeVariable(String),
    #[error("quantified variable {0} must have an uninterpreted sort")]
    BoolBinder(String),
    #[error("expected a formula, found a term of sort {0}")]
    NotFormula(String),
}

/// `proxy ⇔ ∀vars. body`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantRecord {
    pub proxy: FuncId,
    /// The literal `proxy ≈ true`.
    pub lit: Lit,
    pub vars: Vec<TermId>,
    pub body: TermId,
    /// The quantified formula the record stands for.
    pub formula: TermId,
}

/// Ground clauses `F` and quantifier records `A`.
#[derive(Clone, Debug, Default)]
pub struct PurifiedProblem {
    pub clauses: Vec<Vec<Lit>>,
    pub records: Vec<QuantRecord>,
    pub skolems: Vec<FuncId>,
    by_formula: HashMap<TermId, usize>,
}

/// Negation normal form over ground literals and proxies.
#[derive(Clone, Debug)]
enum Nnf {
    Const(bool),
    Lit(Lit),
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
}

impl PurifiedProblem {
    pub fn new() -> PurifiedProblem {
        PurifiedProblem::default()
    }

    /// Purifies `psi` and appends the result. Returns the new clauses.
    pub fn purify(&mut self, store: &mut Store, psi: TermId) -> Result<Vec<Vec<Lit>>, PurifyError> {
        if store.sort(psi) != BOOL {
            return Err(PurifyError::NotFormula(store.sort_name(store.sort(psi)).to_string()));
        }
        if let Some(&x) = store.free_vars(psi).first() {
            return Err(PurifyError::FreeVariable(store.display(x)));
        }
        let nnf = self.nnf(store, psi, true)?;
        let mut out = Vec::new();
        for c in self.cnf(store, nnf, &mut out) {
            out.push(c);
        }
        let out: Vec<Vec<Lit>> = out.into_iter().filter_map(normalize).collect();
        self.clauses.extend(out.iter().cloned());
        Ok(out)
    }

    /// Purified clauses of `¬a ∨ φσ` for record `q`.
    pub fn instantiate(&mut self, store: &mut Store, q: usize, sigma: &Subst) -> Vec<Vec<Lit>> {
        let rec = self.records[q].clone();
        for &x in &rec.vars {
            assert!(sigma.get(x).is_some(), "instance misses variable {}", store.display(x));
        }
        let inst = store.apply_subst(rec.body, sigma);
        let proxy = store.app(rec.proxy, &[]);
        let np = store.mk_not(proxy).unwrap();
        let clause = store.mk_or(vec![np, inst]).unwrap();
        self.purify(store, clause).expect("instances are closed formulas")
    }

    pub fn record_of(&self, formula: TermId) -> Option<usize> {
        self.by_formula.get(&formula).copied()
    }

    fn proxy_for(&mut self, store: &mut Store, formula: TermId) -> Result<Lit, PurifyError> {
        if let Some(&i) = self.by_formula.get(&formula) {
            return Ok(self.records[i].lit);
        }
        let (mut vars, mut body) = match store.node(formula) {
            Node::Forall { vars, body } => (vars.clone(), *body),
            _ => unreachable!(),
        };
        // Merge directly nested universals into one prefix.
        while let Node::Forall { vars: inner, body: b } = store.node(body).clone() {
            if inner.iter().any(|v| vars.contains(v)) {
                break;
            }
            vars.extend(inner);
            body = b;
        }
        for &v in &vars {
            if store.sort(v) == BOOL {
                return Err(PurifyError::BoolBinder(store.display(v)));
            }
        }
        let proxy = store.fresh_fun("q", vec![], BOOL, Origin::Proxy);
        let pt = store.app(proxy, &[]);
        let lit = store.pred_lit(pt, true);
        self.by_formula.insert(formula, self.records.len());
        self.records.push(QuantRecord { proxy, lit, vars, body, formula });
        Ok(lit)
    }

    fn skolemize(&mut self, store: &mut Store, vars: &[TermId], body: TermId) -> Result<TermId, PurifyError> {
        let mut sigma = Subst::new();
        for &v in vars {
            let s = store.sort(v);
            if s == BOOL {
                return Err(PurifyError::BoolBinder(store.display(v)));
            }
            let k = store.fresh_fun("k", vec![], s, Origin::Skolem);
            self.skolems.push(k);
            let kt = store.app(k, &[]);
            sigma.insert(store, v, kt);
        }
        Ok(store.apply_subst(body, &sigma))
    }

    fn nnf(&mut self, store: &mut Store, t: TermId, pos: bool) -> Result<Nnf, PurifyError> {
        let node = store.node(t).clone();
        Ok(match node {
            Node::Not(a) => self.nnf(store, a, !pos)?,
            Node::And(args) | Node::Or(args) => {
                let is_and = matches!(store.node(t), Node::And(_));
                let kids = args.iter().map(|&a| self.nnf(store, a, pos)).collect::<Result<Vec<_>, _>>()?;
                if is_and == pos {
                    Nnf::And(kids)
                } else {
                    Nnf::Or(kids)
                }
            }
            Node::Eq(a, b) => Nnf::Lit(store.eq_lit(a, b, pos)),
            Node::App { .. } => {
                if t == store.t_true() {
                    Nnf::Const(pos)
                } else if t == store.t_false() {
                    Nnf::Const(!pos)
                } else {
                    Nnf::Lit(store.pred_lit(t, pos))
                }
            }
            Node::Forall { vars, body } => {
                if pos {
                    Nnf::Lit(self.proxy_for(store, t)?)
                } else {
                    let inst = self.skolemize(store, &vars, body)?;
                    self.nnf(store, inst, false)?
                }
            }
            Node::Var { name, .. } => return Err(PurifyError::FreeVariable(name)),
        })
    }

    /// Clauses of `f`, naming large disjunction arguments with fresh
    /// constants whose defining clauses go to `defs`.
    fn cnf(&mut self, store: &mut Store, f: Nnf, defs: &mut Vec<Vec<Lit>>) -> Vec<Vec<Lit>> {
        match f {
            Nnf::Const(true) => vec![],
            Nnf::Const(false) => vec![vec![]],
            Nnf::Lit(l) => vec![vec![l]],
            Nnf::And(kids) => kids.into_iter().flat_map(|k| self.cnf(store, k, defs)).collect(),
            Nnf::Or(kids) => {
                let mut parts: Vec<Vec<Vec<Lit>>> = kids.into_iter().map(|k| self.cnf(store, k, defs)).collect();
                loop {
                    let total = parts.iter().map(|p| p.len()).product::<usize>();
                    if total <= DISTRIBUTION_LIMIT || parts.iter().all(|p| p.len() <= 1) {
                        break;
                    }
                    let (i, _) = parts.iter().enumerate().max_by_key(|(i, p)| (p.len(), std::cmp::Reverse(*i))).unwrap();
                    let name = store.fresh_fun("n", vec![], BOOL, Origin::Aux);
                    let nt = store.app(name, &[]);
                    let nl = store.pred_lit(nt, true);
                    for mut c in std::mem::take(&mut parts[i]) {
                        c.push(!nl);
                        defs.push(c);
                    }
                    parts[i] = vec![vec![nl]];
                }
                let mut acc: Vec<Vec<Lit>> = vec![vec![]];
                for p in parts {
                    let mut next = Vec::with_capacity(acc.len() * p.len());
                    for a in &acc {
                        for c in &p {
                            let mut m = a.clone();
                            m.extend(c.iter().copied());
                            next.push(m);
                        }
                    }
                    acc = next;
                }
                acc
            }
        }
    }
}

/// Sorted, duplicate-free clause; `None` for tautologies.
fn normalize(c: Vec<Lit>) -> Option<Vec<Lit>> {
    let c = crate::kernel::Clause::new(c);
    if c.is_tautology() {
        None
    } else {
        Some(c.into_lits())
    }
}
