//! Backtrackable congruence closure with explanations.
//!
//! Union by size without path compression, so every union is undone by a
//! single trail entry. Each class keeps its lowest-created member as the
//! representative. Disequalities are stored per class and only checked for
//! contradiction; nothing is derived from them.

use std::collections::{HashMap, HashSet};

use crate::kernel::{Atom, FuncId, Lit, SortId, Store, TermId};

/// Why two nodes were merged.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Justification {
    Lit(Lit),
    /// Two applications of the same symbol whose arguments are pairwise equal.
    Congruence(u32, u32),
}

/// Structural changes the cardinality solver mirrors in its disequality graphs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EgEvent {
    NewClass { node: u32, sort: SortId },
    Merge { loser: u32, winner: u32, sort: SortId },
    Diseq { a: u32, b: u32, sort: SortId },
}

#[derive(Clone, Debug)]
enum Undo {
    Union { loser: u32, winner: u32, old_min: u32, parents_len: usize, diseq_len: usize, edge: (u32, u32) },
    TableInsert(FuncId, Vec<u32>),
    Diseq { ra: u32, rb: u32 },
}

#[derive(Clone, Debug)]
struct DiseqEntry {
    a: u32,
    b: u32,
    lit: Lit,
}

#[derive(Clone, Debug, Default)]
pub struct EGraph {
    term_of: Vec<TermId>,
    node_of: HashMap<TermId, u32>,
    sort: Vec<SortId>,
    app: Vec<Option<(FuncId, Vec<u32>)>>,
    uf: Vec<u32>,
    size: Vec<u32>,
    min_member: Vec<u32>,
    next: Vec<u32>,
    parents: Vec<Vec<u32>>,
    table: HashMap<(FuncId, Vec<u32>), u32>,
    proof: Vec<Option<(u32, Justification)>>,
    diseqs: Vec<DiseqEntry>,
    class_diseqs: Vec<Vec<u32>>,
    undo: Vec<Undo>,
    pending: Vec<(u32, u32, Justification)>,
    events: Vec<EgEvent>,
    record_events: bool,
}

impl EGraph {
    pub fn new() -> EGraph {
        EGraph::default()
    }

    /// When enabled, structural changes are queued for [`EGraph::drain_events`].
    pub fn set_record_events(&mut self, on: bool) {
        self.record_events = on;
    }

    pub fn drain_events(&mut self) -> Vec<EgEvent> {
        std::mem::take(&mut self.events)
    }

    pub fn num_nodes(&self) -> usize {
        self.term_of.len()
    }

    pub fn node(&self, t: TermId) -> Option<u32> {
        self.node_of.get(&t).copied()
    }

    pub fn term(&self, n: u32) -> TermId {
        self.term_of[n as usize]
    }

    pub fn node_sort(&self, n: u32) -> SortId {
        self.sort[n as usize]
    }

    pub fn is_registered(&self, t: TermId) -> bool {
        self.node_of.contains_key(&t)
    }

    /// All registered terms in creation order.
    pub fn terms(&self) -> &[TermId] {
        &self.term_of
    }

    /// Registers a ground application and its subterms. Registration is
    /// permanent, so callers only register terms at the base decision level.
    pub fn add_term(&mut self, store: &Store, t: TermId) -> u32 {
        if let Some(&n) = self.node_of.get(&t) {
            return n;
        }
        let (func, args) = store.as_app(t).expect("only ground applications are registered");
        let args = args.to_vec();
        let kids: Vec<u32> = args.iter().map(|&a| self.add_term(store, a)).collect();
        let n = self.term_of.len() as u32;
        self.term_of.push(t);
        self.node_of.insert(t, n);
        self.sort.push(store.sort(t));
        self.uf.push(n);
        self.size.push(1);
        self.min_member.push(n);
        self.next.push(n);
        self.parents.push(Vec::new());
        self.proof.push(None);
        self.class_diseqs.push(Vec::new());
        if self.record_events {
            self.events.push(EgEvent::NewClass { node: n, sort: store.sort(t) });
        }
        if !kids.is_empty() {
            let mut roots = Vec::with_capacity(kids.len());
            for &k in &kids {
                let r = self.find(k);
                if !self.parents[r as usize].contains(&n) {
                    self.parents[r as usize].push(n);
                }
                roots.push(r);
            }
            let key = (func, roots);
            match self.table.get(&key) {
                Some(&q) => self.pending.push((n, q, Justification::Congruence(n, q))),
                None => {
                    self.table.insert(key, n);
                }
            }
            self.app.push(Some((func, kids)));
            // Any congruence found here only merges the new node into an
            // existing class; it cannot conflict with stored disequalities
            // because the new class has none.
            let r = self.process_pending();
            debug_assert!(r.is_ok());
        } else {
            self.app.push(Some((func, kids)));
        }
        n
    }

    pub fn find(&self, mut n: u32) -> u32 {
        while self.uf[n as usize] != n {
            n = self.uf[n as usize];
        }
        n
    }

    fn node_req(&self, t: TermId) -> u32 {
        *self.node_of.get(&t).unwrap_or_else(|| panic!("term {t:?} not registered"))
    }

    /// Canonical representative: the earliest-created member of the class.
    pub fn rep(&self, t: TermId) -> TermId {
        let n = self.node_req(t);
        self.term_of[self.min_member[self.find(n) as usize] as usize]
    }

    pub fn rep_node(&self, n: u32) -> u32 {
        self.min_member[self.find(n) as usize]
    }

    pub fn are_equal(&self, a: TermId, b: TermId) -> bool {
        self.find(self.node_req(a)) == self.find(self.node_req(b))
    }

    /// True when a stored disequality links the two classes.
    pub fn are_disequal(&self, a: TermId, b: TermId) -> bool {
        let (ra, rb) = (self.find(self.node_req(a)), self.find(self.node_req(b)));
        self.diseq_between(ra, rb).is_some()
    }

    /// Index of a stored disequality between two class roots.
    fn diseq_between(&self, ra: u32, rb: u32) -> Option<usize> {
        let (small, other) = if self.class_diseqs[ra as usize].len() <= self.class_diseqs[rb as usize].len() {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.class_diseqs[small as usize].iter().map(|&d| d as usize).find(|&d| {
            let e = &self.diseqs[d];
            let (x, y) = (self.find(e.a), self.find(e.b));
            (x == small && y == other) || (y == small && x == other)
        })
    }

    /// Class roots that are currently linked by a disequality to `root`.
    pub fn diseq_neighbors(&self, root: u32) -> Vec<u32> {
        let mut out: Vec<u32> = self.class_diseqs[root as usize]
            .iter()
            .map(|&d| {
                let e = &self.diseqs[d as usize];
                let (x, y) = (self.find(e.a), self.find(e.b));
                if x == root {
                    y
                } else {
                    x
                }
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Class representatives of sort `s` in creation order.
    pub fn classes_of_sort(&self, s: SortId) -> Vec<TermId> {
        (0..self.term_of.len() as u32)
            .filter(|&n| self.sort[n as usize] == s && self.min_member[self.find(n) as usize] == n)
            .map(|n| self.term_of[n as usize])
            .collect()
    }

    /// Members of the class of `t`, in creation order.
    pub fn class_members(&self, t: TermId) -> Vec<TermId> {
        let n = self.node_req(t);
        let mut out = vec![n];
        let mut c = self.next[n as usize];
        while c != n {
            out.push(c);
            c = self.next[c as usize];
        }
        out.sort_unstable();
        out.into_iter().map(|m| self.term_of[m as usize]).collect()
    }

    pub fn mark(&self) -> usize {
        self.undo.len()
    }

    pub fn undo_to(&mut self, mark: usize) {
        self.pending.clear();
        while self.undo.len() > mark {
            match self.undo.pop().unwrap() {
                Undo::Union { loser, winner, old_min, parents_len, diseq_len, edge: (a, b) } => {
                    let (l, w) = (loser as usize, winner as usize);
                    self.uf[l] = loser;
                    self.size[w] -= self.size[l];
                    self.min_member[w] = old_min;
                    self.next.swap(l, w);
                    self.parents[w].truncate(parents_len);
                    self.class_diseqs[w].truncate(diseq_len);
                    // Later reroots may have flipped the edge; drop it from
                    // whichever endpoint now holds it.
                    if matches!(self.proof[a as usize], Some((p, _)) if p == b) {
                        self.proof[a as usize] = None;
                    } else {
                        debug_assert!(matches!(self.proof[b as usize], Some((p, _)) if p == a));
                        self.proof[b as usize] = None;
                    }
                }
                Undo::TableInsert(f, key) => {
                    self.table.remove(&(f, key));
                }
                Undo::Diseq { ra, rb } => {
                    self.diseqs.pop();
                    self.class_diseqs[ra as usize].pop();
                    if rb != ra {
                        self.class_diseqs[rb as usize].pop();
                    }
                }
            }
        }
    }

    /// Asserts a ground literal over registered terms. On inconsistency,
    /// returns a set of asserted literals that is EUF-unsatisfiable.
    pub fn assert_lit(&mut self, store: &Store, l: Lit) -> Result<(), Vec<Lit>> {
        match store.atom(l.atom()) {
            Atom::Eq(a, b) => {
                if l.is_pos() {
                    self.assert_eq(a, b, l)
                } else {
                    self.assert_diseq(a, b, l)
                }
            }
            Atom::Card(..) => Ok(()),
        }
    }

    pub fn assert_eq(&mut self, a: TermId, b: TermId, l: Lit) -> Result<(), Vec<Lit>> {
        let (na, nb) = (self.node_req(a), self.node_req(b));
        self.pending.push((na, nb, Justification::Lit(l)));
        self.process_pending()
    }

    pub fn assert_diseq(&mut self, a: TermId, b: TermId, l: Lit) -> Result<(), Vec<Lit>> {
        let (na, nb) = (self.node_req(a), self.node_req(b));
        let (ra, rb) = (self.find(na), self.find(nb));
        let d = self.diseqs.len() as u32;
        self.diseqs.push(DiseqEntry { a: na, b: nb, lit: l });
        self.class_diseqs[ra as usize].push(d);
        if rb != ra {
            self.class_diseqs[rb as usize].push(d);
        }
        self.undo.push(Undo::Diseq { ra, rb });
        if ra == rb {
            let mut expl = self.explain_nodes(na, nb);
            expl.push(l);
            return Err(dedup(expl));
        }
        if self.record_events {
            self.events.push(EgEvent::Diseq { a: ra, b: rb, sort: self.sort[ra as usize] });
        }
        Ok(())
    }

    fn process_pending(&mut self) -> Result<(), Vec<Lit>> {
        while let Some((a, b, j)) = self.pending.pop() {
            let (ra, rb) = (self.find(a), self.find(b));
            if ra == rb {
                continue;
            }
            let (winner, loser) = if self.size[ra as usize] > self.size[rb as usize]
                || (self.size[ra as usize] == self.size[rb as usize] && ra < rb)
            {
                (ra, rb)
            } else {
                (rb, ra)
            };
            // Proof forest: reroot at `a`, then hang it under `b`.
            self.reroot(a);
            self.proof[a as usize] = Some((b, j));
            let (w, l) = (winner as usize, loser as usize);
            self.undo.push(Undo::Union {
                loser,
                winner,
                old_min: self.min_member[w],
                parents_len: self.parents[w].len(),
                diseq_len: self.class_diseqs[w].len(),
                edge: (a, b),
            });
            self.uf[l] = winner;
            self.size[w] += self.size[l];
            self.min_member[w] = self.min_member[w].min(self.min_member[l]);
            self.next.swap(l, w);
            if self.record_events {
                self.events.push(EgEvent::Merge { loser, winner, sort: self.sort[w] });
            }
            // Disequality conflict: any stored disequality of the loser
            // class whose other side is now the winner.
            let conflict = self.class_diseqs[l].iter().map(|&d| d as usize).find(|&d| {
                let e = &self.diseqs[d];
                self.find(e.a) == self.find(e.b)
            });
            let ld = self.class_diseqs[l].clone();
            self.class_diseqs[w].extend(ld);
            if let Some(d) = conflict {
                self.pending.clear();
                let e = self.diseqs[d].clone();
                let mut expl = self.explain_nodes(e.a, e.b);
                expl.push(e.lit);
                return Err(dedup(expl));
            }
            let lp = self.parents[l].clone();
            for &p in &lp {
                let (f, kids) = self.app[p as usize].clone().unwrap();
                let key: Vec<u32> = kids.iter().map(|&k| self.find(k)).collect();
                match self.table.get(&(f, key.clone())) {
                    Some(&q) => {
                        if self.find(q) != self.find(p) {
                            self.pending.push((p, q, Justification::Congruence(p, q)));
                        }
                    }
                    None => {
                        self.table.insert((f, key.clone()), p);
                        self.undo.push(Undo::TableInsert(f, key));
                    }
                }
            }
            self.parents[w].extend(lp);
        }
        Ok(())
    }

    fn reroot(&mut self, a: u32) {
        let mut cur = a;
        let mut incoming: Option<(u32, Justification)> = None;
        loop {
            let old = self.proof[cur as usize].take();
            self.proof[cur as usize] = incoming;
            match old {
                None => break,
                Some((p, j)) => {
                    incoming = Some((cur, j));
                    cur = p;
                }
            }
        }
    }

    /// Asserted literals entailing `a ≈ b`.
    pub fn explain_eq(&self, a: TermId, b: TermId) -> Vec<Lit> {
        let (na, nb) = (self.node_req(a), self.node_req(b));
        assert_eq!(self.find(na), self.find(nb), "explain_eq on terms in different classes");
        dedup(self.explain_nodes(na, nb))
    }

    /// Asserted literals entailing `a ≉ b` through a stored disequality.
    pub fn explain_diseq(&self, a: TermId, b: TermId) -> Option<Vec<Lit>> {
        let (na, nb) = (self.node_req(a), self.node_req(b));
        let d = self.diseq_between(self.find(na), self.find(nb))?;
        let e = &self.diseqs[d];
        let mut out = vec![e.lit];
        if self.find(e.a) == self.find(na) {
            out.extend(self.explain_nodes(na, e.a));
            out.extend(self.explain_nodes(nb, e.b));
        } else {
            out.extend(self.explain_nodes(na, e.b));
            out.extend(self.explain_nodes(nb, e.a));
        }
        Some(dedup(out))
    }

    fn explain_nodes(&self, a: u32, b: u32) -> Vec<Lit> {
        let mut out = Vec::new();
        let mut seen_pairs = HashSet::new();
        let mut work = vec![(a, b)];
        while let Some((x, y)) = work.pop() {
            if x == y || !seen_pairs.insert((x.min(y), x.max(y))) {
                continue;
            }
            let mut anc = Vec::new();
            let mut c = x;
            anc.push(c);
            while let Some((p, _)) = self.proof[c as usize] {
                c = p;
                anc.push(c);
            }
            let anc_set: HashSet<u32> = anc.iter().copied().collect();
            let mut lca = y;
            while !anc_set.contains(&lca) {
                lca = self.proof[lca as usize].expect("nodes not connected in proof forest").0;
            }
            for start in [x, y] {
                let mut c = start;
                while c != lca {
                    let (p, j) = self.proof[c as usize].unwrap();
                    match j {
                        Justification::Lit(l) => out.push(l),
                        Justification::Congruence(u, v) => {
                            let ku = &self.app[u as usize].as_ref().unwrap().1;
                            let kv = &self.app[v as usize].as_ref().unwrap().1;
                            for (&s, &t) in ku.iter().zip(kv) {
                                work.push((s, t));
                            }
                        }
                    }
                    c = p;
                }
            }
        }
        out
    }

    /// Canonical summary of the current partition and disequality store,
    /// used to check that undo restores state exactly.
    pub fn fingerprint(&self) -> (Vec<u32>, usize) {
        let reps = (0..self.term_of.len() as u32).map(|n| self.rep_node(n)).collect();
        (reps, self.diseqs.len())
    }
}

fn dedup(mut v: Vec<Lit>) -> Vec<Lit> {
    v.sort_unstable();
    v.dedup();
    v
}
