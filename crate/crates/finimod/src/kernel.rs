//! Sorted term language shared by every solver component.
//!
//! Terms are hash-consed into a [`Store`]; two terms are structurally equal
//! exactly when their [`TermId`]s are equal. Ground atoms are equalities
//! between terms (a predicate application `P(t)` is the atom `P(t) ≈ true`)
//! or cardinality constants, interned into the same store so the SAT core and
//! the theory solver agree on atom identity.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SortId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FuncId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomId(pub u32);

/// The built-in boolean sort is always sort 0.
pub const BOOL: SortId = SortId(0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SortKind {
    Uninterpreted,
    Boolean,
}

#[derive(Clone, Debug)]
pub struct Sort {
    pub name: String,
    pub kind: SortKind,
}

/// Where a function symbol came from. Only used for printing and for
/// checks that fresh symbols never collide with user input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    User,
    Builtin,
    Proxy,
    Skolem,
    Aux,
}

#[derive(Clone, Debug)]
pub struct FuncDecl {
    pub name: String,
    pub args: Vec<SortId>,
    pub ret: SortId,
    pub origin: Origin,
}

impl FuncDecl {
    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Var { name: String, sort: SortId },
    App { func: FuncId, args: Vec<TermId> },
    Eq(TermId, TermId),
    Not(TermId),
    And(Vec<TermId>),
    Or(Vec<TermId>),
    Forall { vars: Vec<TermId>, body: TermId },
}

#[derive(Clone, Debug)]
pub struct TermData {
    pub node: Node,
    pub sort: SortId,
    pub ground: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CardScope {
    Sort(SortId),
    Signature,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Atom {
    /// Oriented so that the first term id is not larger than the second.
    Eq(TermId, TermId),
    Card(CardScope, u32),
}

/// A literal packs an atom id and a sign: `atom << 1 | negated`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(pub u32);

impl Lit {
    pub fn new(atom: AtomId, positive: bool) -> Lit {
        Lit(atom.0 << 1 | u32::from(!positive))
    }
    pub fn atom(self) -> AtomId {
        AtomId(self.0 >> 1)
    }
    pub fn is_pos(self) -> bool {
        self.0 & 1 == 0
    }
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.is_pos() { "" } else { "-" }, self.atom().0)
    }
}

/// A duplicate-free disjunction of literals, kept sorted. The empty clause is ⊥.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause {
    lits: Vec<Lit>,
}

impl Clause {
    pub fn new(mut lits: Vec<Lit>) -> Clause {
        lits.sort_unstable();
        lits.dedup();
        Clause { lits }
    }
    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }
    pub fn len(&self) -> usize {
        self.lits.len()
    }
    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }
    pub fn is_tautology(&self) -> bool {
        self.lits.windows(2).any(|w| w[0] == !w[1])
    }
    pub fn into_lits(self) -> Vec<Lit> {
        self.lits
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KernelError {
    #[error("{func} expects {expected} arguments, got {found}")]
    Arity { func: String, expected: usize, found: usize },
    #[error("argument {position} of {func} has sort {found}, expected {expected}")]
    SortMismatch { func: String, position: usize, expected: String, found: String },
    #[error("equality between sorts {0} and {1}")]
    EqSorts(String, String),
    #[error("expected a formula, found a term of sort {0}")]
    NotFormula(String),
    #[error("quantified variable {0} must have an uninterpreted sort")]
    BadBinder(String),
    #[error("symbol {0} already declared")]
    Redeclared(String),
}

/// Sort-preserving finite map from variables to terms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subst {
    map: BTreeMap<TermId, TermId>,
}

impl Subst {
    pub fn new() -> Subst {
        Subst::default()
    }
    pub fn from_pairs(store: &Store, pairs: impl IntoIterator<Item = (TermId, TermId)>) -> Subst {
        let mut s = Subst::new();
        for (x, t) in pairs {
            s.insert(store, x, t);
        }
        s
    }
    /// Binds `x ↦ t`. Identity bindings are dropped so the domain stays minimal.
    pub fn insert(&mut self, store: &Store, x: TermId, t: TermId) {
        assert!(store.is_var(x), "substitution domain must be variables");
        assert_eq!(store.sort(x), store.sort(t), "substitution must preserve sorts");
        if x == t {
            self.map.remove(&x);
        } else {
            self.map.insert(x, t);
        }
    }
    pub fn get(&self, x: TermId) -> Option<TermId> {
        self.map.get(&x).copied()
    }
    pub fn len(&self) -> usize {
        self.map.len()
    }
    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
    pub fn iter(&self) -> impl Iterator<Item = (TermId, TermId)> + '_ {
        self.map.iter().map(|(&k, &v)| (k, v))
    }
    pub fn domain(&self) -> impl Iterator<Item = TermId> + '_ {
        self.map.keys().copied()
    }
    fn without(&self, vars: &[TermId]) -> Subst {
        let mut s = self.clone();
        for v in vars {
            s.map.remove(v);
        }
        s
    }
}

/// Per-problem arena of sorts, symbols, terms and atoms.
#[derive(Clone, Debug)]
pub struct Store {
    sorts: Vec<Sort>,
    funcs: Vec<FuncDecl>,
    func_names: HashMap<String, FuncId>,
    terms: Vec<TermData>,
    interned: HashMap<Node, TermId>,
    atoms: Vec<Atom>,
    atom_ids: HashMap<Atom, AtomId>,
    fresh_counter: u32,
    t_true: TermId,
    t_false: TermId,
}

impl Default for Store {
    fn default() -> Self {
        Store::new()
    }
}

impl Store {
    pub fn new() -> Store {
        let mut s = Store {
            sorts: vec![Sort { name: "Bool".into(), kind: SortKind::Boolean }],
            funcs: Vec::new(),
            func_names: HashMap::new(),
            terms: Vec::new(),
            interned: HashMap::new(),
            atoms: Vec::new(),
            atom_ids: HashMap::new(),
            fresh_counter: 0,
            t_true: TermId(0),
            t_false: TermId(0),
        };
        let ft = s.add_func("true", vec![], BOOL, Origin::Builtin);
        let ff = s.add_func("false", vec![], BOOL, Origin::Builtin);
        s.t_true = s.mk_app(ft, vec![]).unwrap();
        s.t_false = s.mk_app(ff, vec![]).unwrap();
        s
    }

    // ---- sorts and symbols ----

    pub fn declare_sort(&mut self, name: &str) -> Result<SortId, KernelError> {
        if self.sort_by_name(name).is_some() {
            return Err(KernelError::Redeclared(name.to_string()));
        }
        self.sorts.push(Sort { name: name.to_string(), kind: SortKind::Uninterpreted });
        Ok(SortId(self.sorts.len() as u32 - 1))
    }

    pub fn sort_by_name(&self, name: &str) -> Option<SortId> {
        self.sorts.iter().position(|s| s.name == name).map(|i| SortId(i as u32))
    }

    pub fn sort_info(&self, s: SortId) -> &Sort {
        &self.sorts[s.0 as usize]
    }

    pub fn sort_name(&self, s: SortId) -> &str {
        &self.sorts[s.0 as usize].name
    }

    pub fn num_sorts(&self) -> usize {
        self.sorts.len()
    }

    /// All uninterpreted sorts in declaration order.
    pub fn uninterpreted_sorts(&self) -> Vec<SortId> {
        (1..self.sorts.len() as u32).map(SortId).collect()
    }

    pub fn declare_fun(&mut self, name: &str, args: Vec<SortId>, ret: SortId) -> Result<FuncId, KernelError> {
        if self.func_names.contains_key(name) {
            return Err(KernelError::Redeclared(name.to_string()));
        }
        Ok(self.add_func(name, args, ret, Origin::User))
    }

    /// Declares a symbol whose name cannot clash with user input (names
    /// contain `!`, which the parser rejects in identifiers).
    pub fn fresh_fun(&mut self, prefix: &str, args: Vec<SortId>, ret: SortId, origin: Origin) -> FuncId {
        loop {
            let name = format!("{prefix}!{}", self.fresh_counter);
            self.fresh_counter += 1;
            if !self.func_names.contains_key(&name) {
                return self.add_func(&name, args, ret, origin);
            }
        }
    }

    fn add_func(&mut self, name: &str, args: Vec<SortId>, ret: SortId, origin: Origin) -> FuncId {
        let id = FuncId(self.funcs.len() as u32);
        self.funcs.push(FuncDecl { name: name.to_string(), args, ret, origin });
        self.func_names.insert(name.to_string(), id);
        id
    }

    pub fn func(&self, f: FuncId) -> &FuncDecl {
        &self.funcs[f.0 as usize]
    }

    pub fn func_by_name(&self, name: &str) -> Option<FuncId> {
        self.func_names.get(name).copied()
    }

    pub fn num_funcs(&self) -> usize {
        self.funcs.len()
    }

    pub fn funcs(&self) -> impl Iterator<Item = FuncId> {
        (0..self.funcs.len() as u32).map(FuncId)
    }

    // ---- terms ----

    pub fn t_true(&self) -> TermId {
        self.t_true
    }

    pub fn t_false(&self) -> TermId {
        self.t_false
    }

    fn intern(&mut self, node: Node, sort: SortId, ground: bool) -> TermId {
        if let Some(&t) = self.interned.get(&node) {
            return t;
        }
        let id = TermId(self.terms.len() as u32);
        self.terms.push(TermData { node: node.clone(), sort, ground });
        self.interned.insert(node, id);
        id
    }

    pub fn mk_var(&mut self, name: &str, sort: SortId) -> TermId {
        self.intern(Node::Var { name: name.to_string(), sort }, sort, false)
    }

    pub fn mk_app(&mut self, func: FuncId, args: Vec<TermId>) -> Result<TermId, KernelError> {
        let decl = &self.funcs[func.0 as usize];
        if decl.args.len() != args.len() {
            return Err(KernelError::Arity { func: decl.name.clone(), expected: decl.args.len(), found: args.len() });
        }
        for (i, (&a, &s)) in args.iter().zip(&decl.args).enumerate() {
            let found = self.sort(a);
            if found != s {
                return Err(KernelError::SortMismatch {
                    func: decl.name.clone(),
                    position: i + 1,
                    expected: self.sort_name(s).to_string(),
                    found: self.sort_name(found).to_string(),
                });
            }
        }
        let ret = decl.ret;
        let ground = args.iter().all(|&a| self.is_ground(a));
        Ok(self.intern(Node::App { func, args }, ret, ground))
    }

    /// Shorthand for applications the caller already knows are well sorted.
    pub fn app(&mut self, func: FuncId, args: &[TermId]) -> TermId {
        self.mk_app(func, args.to_vec()).expect("ill-sorted application")
    }

    pub fn mk_eq(&mut self, a: TermId, b: TermId) -> Result<TermId, KernelError> {
        let (sa, sb) = (self.sort(a), self.sort(b));
        if sa != sb || sa == BOOL {
            return Err(KernelError::EqSorts(self.sort_name(sa).into(), self.sort_name(sb).into()));
        }
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let ground = self.is_ground(a) && self.is_ground(b);
        Ok(self.intern(Node::Eq(a, b), BOOL, ground))
    }

    fn check_formula(&self, t: TermId) -> Result<(), KernelError> {
        if self.sort(t) != BOOL {
            return Err(KernelError::NotFormula(self.sort_name(self.sort(t)).into()));
        }
        Ok(())
    }

    pub fn mk_not(&mut self, a: TermId) -> Result<TermId, KernelError> {
        self.check_formula(a)?;
        let g = self.is_ground(a);
        Ok(self.intern(Node::Not(a), BOOL, g))
    }

    pub fn mk_and(&mut self, args: Vec<TermId>) -> Result<TermId, KernelError> {
        for &a in &args {
            self.check_formula(a)?;
        }
        let g = args.iter().all(|&a| self.is_ground(a));
        Ok(self.intern(Node::And(args), BOOL, g))
    }

    pub fn mk_or(&mut self, args: Vec<TermId>) -> Result<TermId, KernelError> {
        for &a in &args {
            self.check_formula(a)?;
        }
        let g = args.iter().all(|&a| self.is_ground(a));
        Ok(self.intern(Node::Or(args), BOOL, g))
    }

    pub fn mk_implies(&mut self, a: TermId, b: TermId) -> Result<TermId, KernelError> {
        let na = self.mk_not(a)?;
        self.mk_or(vec![na, b])
    }

    pub fn mk_iff(&mut self, a: TermId, b: TermId) -> Result<TermId, KernelError> {
        let l = self.mk_implies(a, b)?;
        let r = self.mk_implies(b, a)?;
        self.mk_and(vec![l, r])
    }

    pub fn mk_forall(&mut self, vars: Vec<TermId>, body: TermId) -> Result<TermId, KernelError> {
        self.check_formula(body)?;
        for &v in &vars {
            if !self.is_var(v) || self.sort(v) == BOOL {
                return Err(KernelError::BadBinder(self.display(v)));
            }
        }
        if vars.is_empty() {
            return Ok(body);
        }
        let mut fv = Vec::new();
        self.collect_free_vars(body, &mut Vec::new(), &mut fv);
        let ground = fv.iter().all(|x| vars.contains(x));
        Ok(self.intern(Node::Forall { vars, body }, BOOL, ground))
    }

    /// `∃x̄ φ` is represented as `¬∀x̄ ¬φ`.
    pub fn mk_exists(&mut self, vars: Vec<TermId>, body: TermId) -> Result<TermId, KernelError> {
        let nb = self.mk_not(body)?;
        let f = self.mk_forall(vars, nb)?;
        self.mk_not(f)
    }

    pub fn term(&self, t: TermId) -> &TermData {
        &self.terms[t.0 as usize]
    }

    pub fn node(&self, t: TermId) -> &Node {
        &self.terms[t.0 as usize].node
    }

    pub fn sort(&self, t: TermId) -> SortId {
        self.terms[t.0 as usize].sort
    }

    pub fn is_ground(&self, t: TermId) -> bool {
        self.terms[t.0 as usize].ground
    }

    pub fn is_var(&self, t: TermId) -> bool {
        matches!(self.node(t), Node::Var { .. })
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// The function symbol and arguments of an application.
    pub fn as_app(&self, t: TermId) -> Option<(FuncId, &[TermId])> {
        match self.node(t) {
            Node::App { func, args } => Some((*func, args)),
            _ => None,
        }
    }

    /// True for uninterpreted applications (including boolean predicates).
    pub fn is_app(&self, t: TermId) -> bool {
        matches!(self.node(t), Node::App { .. })
    }

    /// Free variables of `t` in first-occurrence order.
    pub fn free_vars(&self, t: TermId) -> Vec<TermId> {
        let mut out = Vec::new();
        self.collect_free_vars(t, &mut Vec::new(), &mut out);
        out
    }

    fn collect_free_vars(&self, t: TermId, bound: &mut Vec<TermId>, out: &mut Vec<TermId>) {
        if self.is_ground(t) {
            return;
        }
        match self.node(t) {
            Node::Var { .. } => {
                if !bound.contains(&t) && !out.contains(&t) {
                    out.push(t);
                }
            }
            Node::App { args, .. } | Node::And(args) | Node::Or(args) => {
                for &a in args {
                    self.collect_free_vars(a, bound, out);
                }
            }
            Node::Eq(a, b) => {
                self.collect_free_vars(*a, bound, out);
                self.collect_free_vars(*b, bound, out);
            }
            Node::Not(a) => self.collect_free_vars(*a, bound, out),
            Node::Forall { vars, body } => {
                let n = bound.len();
                bound.extend(vars.iter().copied());
                self.collect_free_vars(*body, bound, out);
                bound.truncate(n);
            }
        }
    }

    /// All ground application subterms of `t` (children first), skipping
    /// anything below a binder that mentions bound variables.
    pub fn ground_subterms(&self, t: TermId, out: &mut Vec<TermId>) {
        let mut seen = std::collections::HashSet::new();
        self.ground_subterms_rec(t, out, &mut seen);
    }

    fn ground_subterms_rec(&self, t: TermId, out: &mut Vec<TermId>, seen: &mut std::collections::HashSet<TermId>) {
        if !seen.insert(t) {
            return;
        }
        match self.node(t) {
            Node::Var { .. } => {}
            Node::App { args, .. } => {
                for &a in args {
                    self.ground_subterms_rec(a, out, seen);
                }
                if self.is_ground(t) {
                    out.push(t);
                }
            }
            Node::Eq(a, b) => {
                self.ground_subterms_rec(*a, out, seen);
                self.ground_subterms_rec(*b, out, seen);
            }
            Node::Not(a) => self.ground_subterms_rec(*a, out, seen),
            Node::And(args) | Node::Or(args) => {
                for &a in args {
                    self.ground_subterms_rec(a, out, seen);
                }
            }
            Node::Forall { body, .. } => self.ground_subterms_rec(*body, out, seen),
        }
    }

    // ---- substitution and unification ----

    /// Simultaneous replacement of free variables.
    pub fn apply_subst(&mut self, t: TermId, s: &Subst) -> TermId {
        if s.is_empty() || self.is_ground(t) {
            return t;
        }
        let mut memo = HashMap::new();
        self.subst_rec(t, s, &mut memo)
    }

    fn subst_rec(&mut self, t: TermId, s: &Subst, memo: &mut HashMap<TermId, TermId>) -> TermId {
        if self.is_ground(t) {
            return t;
        }
        if let Some(&r) = memo.get(&t) {
            return r;
        }
        let r = match self.node(t).clone() {
            Node::Var { .. } => s.get(t).unwrap_or(t),
            Node::App { func, args } => {
                let a: Vec<_> = args.iter().map(|&x| self.subst_rec(x, s, memo)).collect();
                self.mk_app(func, a).unwrap()
            }
            Node::Eq(a, b) => {
                let (a, b) = (self.subst_rec(a, s, memo), self.subst_rec(b, s, memo));
                self.mk_eq(a, b).unwrap()
            }
            Node::Not(a) => {
                let a = self.subst_rec(a, s, memo);
                self.mk_not(a).unwrap()
            }
            Node::And(args) => {
                let a: Vec<_> = args.iter().map(|&x| self.subst_rec(x, s, memo)).collect();
                self.mk_and(a).unwrap()
            }
            Node::Or(args) => {
                let a: Vec<_> = args.iter().map(|&x| self.subst_rec(x, s, memo)).collect();
                self.mk_or(a).unwrap()
            }
            Node::Forall { vars, body } => {
                let inner = s.without(&vars);
                let b = if inner.is_empty() { body } else { self.subst_rec(body, &inner, &mut HashMap::new()) };
                self.mk_forall(vars, b).unwrap()
            }
        };
        memo.insert(t, r);
        r
    }

    /// Most general unifier of two first-order terms (variables and
    /// applications only), with occurs check.
    pub fn mgu(&mut self, t1: TermId, t2: TermId) -> Option<Subst> {
        if self.sort(t1) != self.sort(t2) {
            return None;
        }
        let mut bind: BTreeMap<TermId, TermId> = BTreeMap::new();
        let mut work = vec![(t1, t2)];
        while let Some((a, b)) = work.pop() {
            let a = self.walk(&bind, a);
            let b = self.walk(&bind, b);
            if a == b {
                continue;
            }
            match (self.node(a).clone(), self.node(b).clone()) {
                (Node::Var { .. }, _) => {
                    if self.occurs(&bind, a, b) {
                        return None;
                    }
                    bind.insert(a, b);
                }
                (_, Node::Var { .. }) => {
                    if self.occurs(&bind, b, a) {
                        return None;
                    }
                    bind.insert(b, a);
                }
                (Node::App { func: f, args: xs }, Node::App { func: g, args: ys }) => {
                    if f != g {
                        return None;
                    }
                    work.extend(xs.into_iter().zip(ys));
                }
                _ => return None,
            }
        }
        // Resolve the triangular form into an idempotent substitution.
        let mut out = Subst::new();
        let keys: Vec<_> = bind.keys().copied().collect();
        for x in keys {
            let r = self.resolve(&bind, x);
            out.insert(self, x, r);
        }
        Some(out)
    }

    fn walk(&self, bind: &BTreeMap<TermId, TermId>, mut t: TermId) -> TermId {
        while let Some(&n) = bind.get(&t) {
            t = n;
        }
        t
    }

    fn occurs(&self, bind: &BTreeMap<TermId, TermId>, x: TermId, t: TermId) -> bool {
        let t = self.walk(bind, t);
        if t == x {
            return true;
        }
        match self.node(t) {
            Node::App { args, .. } => args.iter().any(|&a| self.occurs(bind, x, a)),
            _ => false,
        }
    }

    fn resolve(&mut self, bind: &BTreeMap<TermId, TermId>, t: TermId) -> TermId {
        let t = self.walk(bind, t);
        match self.node(t).clone() {
            Node::App { func, args } => {
                let a: Vec<_> = args.iter().map(|&x| self.resolve(bind, x)).collect();
                self.mk_app(func, a).unwrap()
            }
            _ => t,
        }
    }

    // ---- atoms ----

    fn intern_atom(&mut self, a: Atom) -> AtomId {
        if let Some(&id) = self.atom_ids.get(&a) {
            return id;
        }
        let id = AtomId(self.atoms.len() as u32);
        self.atoms.push(a);
        self.atom_ids.insert(a, id);
        id
    }

    /// The literal `a ≈ b` (or `a ≉ b`), canonically oriented by term id.
    pub fn eq_lit(&mut self, a: TermId, b: TermId, positive: bool) -> Lit {
        assert_eq!(self.sort(a), self.sort(b), "equality between different sorts");
        assert!(self.is_ground(a) && self.is_ground(b), "atoms must be ground");
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        Lit::new(self.intern_atom(Atom::Eq(a, b)), positive)
    }

    /// The literal `p ≈ true` for a ground boolean term `p`.
    pub fn pred_lit(&mut self, p: TermId, positive: bool) -> Lit {
        assert_eq!(self.sort(p), BOOL);
        let t = self.t_true;
        self.eq_lit(p, t, positive)
    }

    pub fn card_lit(&mut self, scope: CardScope, k: u32, positive: bool) -> Lit {
        assert!(k >= 1, "cardinality bounds start at 1");
        Lit::new(self.intern_atom(Atom::Card(scope, k)), positive)
    }

    pub fn find_card(&self, scope: CardScope, k: u32) -> Option<AtomId> {
        self.atom_ids.get(&Atom::Card(scope, k)).copied()
    }

    pub fn find_eq(&self, a: TermId, b: TermId) -> Option<AtomId> {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.atom_ids.get(&Atom::Eq(a, b)).copied()
    }

    pub fn atom(&self, a: AtomId) -> Atom {
        self.atoms[a.0 as usize]
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    // ---- printing ----

    pub fn display(&self, t: TermId) -> String {
        let mut s = String::new();
        self.write_term(t, &mut s);
        s
    }

    fn write_term(&self, t: TermId, out: &mut String) {
        match self.node(t) {
            Node::Var { name, .. } => out.push_str(name),
            Node::App { func, args } => {
                out.push_str(&self.func(*func).name);
                if !args.is_empty() {
                    out.push('(');
                    for (i, &a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        self.write_term(a, out);
                    }
                    out.push(')');
                }
            }
            Node::Eq(a, b) => {
                self.write_term(*a, out);
                out.push_str(" = ");
                self.write_term(*b, out);
            }
            Node::Not(a) => {
                out.push_str("not ");
                self.write_term(*a, out);
            }
            Node::And(args) | Node::Or(args) => {
                let op = if matches!(self.node(t), Node::And(_)) { " and " } else { " or " };
                out.push('(');
                for (i, &a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(op);
                    }
                    self.write_term(a, out);
                }
                out.push(')');
            }
            Node::Forall { vars, body } => {
                out.push_str("forall ");
                for (i, &v) in vars.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    self.write_term(v, out);
                }
                out.push_str(". ");
                self.write_term(*body, out);
            }
        }
    }

    pub fn display_lit(&self, l: Lit) -> String {
        match self.atom(l.atom()) {
            Atom::Eq(a, b) if b == self.t_true || a == self.t_true => {
                let p = if a == self.t_true { b } else { a };
                format!("{}{}", if l.is_pos() { "" } else { "¬" }, self.display(p))
            }
            Atom::Eq(a, b) => {
                format!("{} {} {}", self.display(a), if l.is_pos() { "≈" } else { "≉" }, self.display(b))
            }
            Atom::Card(scope, k) => {
                let sc = match scope {
                    CardScope::Sort(s) => self.sort_name(s).to_string(),
                    CardScope::Signature => "Σ".to_string(),
                };
                format!("{}card[{sc},{k}]", if l.is_pos() { "" } else { "¬" })
            }
        }
    }

    pub fn display_clause(&self, c: &[Lit]) -> String {
        if c.is_empty() {
            return "⊥".into();
        }
        c.iter().map(|&l| self.display_lit(l)).collect::<Vec<_>>().join(" ∨ ")
    }
}
