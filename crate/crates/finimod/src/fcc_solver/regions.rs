//! Region partitions of a disequality graph.
//!
//! Vertices are congruence-class roots of one sort and edges are asserted
//! disequalities between classes. With cardinality bound `k` the vertices are
//! partitioned into `(k+1)`-regions, so that every `(k+1)`-clique sits inside
//! a single region. Each region with at least `k+1` vertices watches `k+1` of
//! them; a fully connected watched set is a clique.
//!
//! Every mutation goes through a journal so that [`RegionGraph::undo_to`]
//! restores the exact previous state.

use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Region {
    members: BTreeSet<u32>,
    watched: Vec<u32>,
    alive: bool,
}

#[derive(Clone, Debug)]
enum Op {
    VertexAdded(u32),
    Alive(u32, bool),
    RegionOf(u32, u32),
    Adj(u32, u32, Option<u32>),
    Ext(u32, u32),
    MemberInsert(u32, u32),
    MemberRemove(u32, u32),
    Watched(u32, Vec<u32>),
    RegionAlive(u32, bool),
    RegionPushed,
    Bound(Option<u32>),
}

/// Canonical snapshot used to compare states before and after undo.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fingerprint {
    pub bound: Option<u32>,
    pub vertices: Vec<(u32, u32, u32)>,
    pub regions: Vec<(u32, Vec<u32>, Vec<u32>)>,
    pub edges: Vec<(u32, u32, u32)>,
}

#[derive(Clone, Debug, Default)]
pub struct RegionGraph {
    regions_on: bool,
    bound: Option<u32>,
    present: Vec<bool>,
    alive: Vec<bool>,
    region_of: Vec<u32>,
    adj: Vec<BTreeMap<u32, u32>>,
    ext: Vec<u32>,
    regions: Vec<Region>,
    journal: Vec<Op>,
}

impl RegionGraph {
    /// With `regions_on == false` all vertices share one region.
    pub fn new(regions_on: bool) -> RegionGraph {
        RegionGraph { regions_on, ..Default::default() }
    }

    pub fn bound(&self) -> Option<u32> {
        self.bound
    }

    pub fn mark(&self) -> usize {
        self.journal.len()
    }

    pub fn undo_to(&mut self, mark: usize) {
        while self.journal.len() > mark {
            match self.journal.pop().unwrap() {
                Op::VertexAdded(v) => {
                    self.present[v as usize] = false;
                    self.alive[v as usize] = false;
                }
                Op::Alive(v, old) => self.alive[v as usize] = old,
                Op::RegionOf(v, old) => self.region_of[v as usize] = old,
                Op::Adj(v, w, old) => match old {
                    Some(m) => {
                        self.adj[v as usize].insert(w, m);
                    }
                    None => {
                        self.adj[v as usize].remove(&w);
                    }
                },
                Op::Ext(v, old) => self.ext[v as usize] = old,
                Op::MemberInsert(r, v) => {
                    self.regions[r as usize].members.remove(&v);
                }
                Op::MemberRemove(r, v) => {
                    self.regions[r as usize].members.insert(v);
                }
                Op::Watched(r, old) => self.regions[r as usize].watched = old,
                Op::RegionAlive(r, old) => self.regions[r as usize].alive = old,
                Op::RegionPushed => {
                    self.regions.pop();
                }
                Op::Bound(old) => self.bound = old,
            }
        }
    }

    // ---- journaled primitives ----

    fn set_alive(&mut self, v: u32, a: bool) {
        self.journal.push(Op::Alive(v, self.alive[v as usize]));
        self.alive[v as usize] = a;
    }

    fn set_region_of(&mut self, v: u32, r: u32) {
        self.journal.push(Op::RegionOf(v, self.region_of[v as usize]));
        self.region_of[v as usize] = r;
    }

    fn set_adj(&mut self, v: u32, w: u32, m: Option<u32>) {
        let old = self.adj[v as usize].get(&w).copied();
        self.journal.push(Op::Adj(v, w, old));
        match m {
            Some(m) => {
                self.adj[v as usize].insert(w, m);
            }
            None => {
                self.adj[v as usize].remove(&w);
            }
        }
    }

    fn set_ext(&mut self, v: u32, e: u32) {
        if self.ext[v as usize] != e {
            self.journal.push(Op::Ext(v, self.ext[v as usize]));
            self.ext[v as usize] = e;
        }
    }

    fn member_insert(&mut self, r: u32, v: u32) {
        if self.regions[r as usize].members.insert(v) {
            self.journal.push(Op::MemberInsert(r, v));
        }
    }

    fn member_remove(&mut self, r: u32, v: u32) {
        if self.regions[r as usize].members.remove(&v) {
            self.journal.push(Op::MemberRemove(r, v));
        }
    }

    fn set_watched(&mut self, r: u32, w: Vec<u32>) {
        if self.regions[r as usize].watched != w {
            let old = std::mem::replace(&mut self.regions[r as usize].watched, w);
            self.journal.push(Op::Watched(r, old));
        }
    }

    fn set_region_alive(&mut self, r: u32, a: bool) {
        self.journal.push(Op::RegionAlive(r, self.regions[r as usize].alive));
        self.regions[r as usize].alive = a;
    }

    fn push_region(&mut self) -> u32 {
        self.regions.push(Region { alive: true, ..Default::default() });
        self.journal.push(Op::RegionPushed);
        self.regions.len() as u32 - 1
    }

    fn set_bound(&mut self, k: Option<u32>) {
        self.journal.push(Op::Bound(self.bound));
        self.bound = k;
    }

    // ---- queries ----

    pub fn is_alive(&self, v: u32) -> bool {
        (v as usize) < self.alive.len() && self.alive[v as usize]
    }

    pub fn vertices(&self) -> Vec<u32> {
        (0..self.alive.len() as u32).filter(|&v| self.alive[v as usize]).collect()
    }

    pub fn num_vertices(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    pub fn adjacent(&self, u: u32, v: u32) -> bool {
        self.adj[u as usize].contains_key(&v)
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adj[v as usize].len()
    }

    pub fn neighbors(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.adj[v as usize].keys().copied()
    }

    pub fn ext(&self, v: u32) -> u32 {
        self.ext[v as usize]
    }

    pub fn region_of(&self, v: u32) -> u32 {
        self.region_of[v as usize]
    }

    /// Live region ids in increasing order.
    pub fn region_ids(&self) -> Vec<u32> {
        (0..self.regions.len() as u32).filter(|&r| self.regions[r as usize].alive).collect()
    }

    pub fn members(&self, r: u32) -> Vec<u32> {
        self.regions[r as usize].members.iter().copied().collect()
    }

    pub fn watched(&self, r: u32) -> &[u32] {
        &self.regions[r as usize].watched
    }

    /// Size of the cliques the partition protects: `k + 1`.
    fn param(&self) -> Option<usize> {
        self.bound.map(|k| k as usize + 1)
    }

    /// Region condition for parameter `p`: for every `0 < i < p`, fewer than
    /// `p - i` members have at least `i` edges leaving the region.
    pub fn satisfies_region_condition(&self, r: u32) -> bool {
        let Some(p) = self.param() else { return true };
        let exts: Vec<u32> = self.regions[r as usize].members.iter().map(|&v| self.ext[v as usize]).collect();
        (1..p).all(|i| exts.iter().filter(|&&e| e as usize >= i).count() < p - i)
    }

    fn ext_in(&self, v: u32, r: u32) -> u32 {
        self.adj[v as usize].keys().filter(|&&w| self.region_of[w as usize] != r).count() as u32
    }

    fn recompute_ext(&mut self, v: u32) {
        let e = self.ext_in(v, self.region_of[v as usize]);
        self.set_ext(v, e);
    }

    fn edges_between(&self, r1: u32, r2: u32) -> usize {
        self.regions[r1 as usize]
            .members
            .iter()
            .map(|&v| self.adj[v as usize].keys().filter(|&&w| self.region_of[w as usize] == r2).count())
            .sum()
    }

    // ---- graph events ----

    fn ensure(&mut self, v: u32) {
        let n = v as usize + 1;
        if self.present.len() < n {
            self.present.resize(n, false);
            self.alive.resize(n, false);
            self.region_of.resize(n, 0);
            self.adj.resize(n, BTreeMap::new());
            self.ext.resize(n, 0);
        }
    }

    pub fn add_vertex(&mut self, v: u32) {
        self.ensure(v);
        assert!(!self.present[v as usize], "vertex added twice");
        self.present[v as usize] = true;
        self.journal.push(Op::VertexAdded(v));
        self.set_alive(v, true);
        self.set_ext(v, 0);
        let r = if self.regions_on {
            self.push_region()
        } else {
            match self.region_ids().first() {
                Some(&r) => r,
                None => self.push_region(),
            }
        };
        self.set_region_of(v, r);
        self.member_insert(r, v);
        self.refresh_watch(r);
    }

    pub fn add_edge(&mut self, u: u32, v: u32) {
        assert!(self.is_alive(u) && self.is_alive(v) && u != v, "edge between dead or equal vertices");
        let m = self.adj[u as usize].get(&v).copied();
        self.set_adj(u, v, Some(m.unwrap_or(0) + 1));
        self.set_adj(v, u, Some(m.unwrap_or(0) + 1));
        if m.is_none() {
            if self.region_of(u) != self.region_of(v) {
                self.set_ext(u, self.ext[u as usize] + 1);
                self.set_ext(v, self.ext[v as usize] + 1);
            }
            let ru = self.region_of(u);
            self.fix_region(ru);
            let rv = self.region_of(v);
            self.fix_region(rv);
        }
    }

    /// Merges vertex `loser` into `winner`, which plays the quotient vertex.
    pub fn merge(&mut self, loser: u32, winner: u32) {
        assert!(self.is_alive(loser) && self.is_alive(winner) && loser != winner);
        let old_nbrs: Vec<(u32, u32)> = self.adj[loser as usize].iter().map(|(&w, &m)| (w, m)).collect();
        for &(w, m) in &old_nbrs {
            self.set_adj(loser, w, None);
            self.set_adj(w, loser, None);
            if w == winner {
                continue;
            }
            let cur = self.adj[winner as usize].get(&w).copied().unwrap_or(0);
            self.set_adj(winner, w, Some(cur + m));
            self.set_adj(w, winner, Some(cur + m));
        }
        let (r1, r2) = (self.region_of(loser), self.region_of(winner));
        self.set_alive(loser, false);
        self.member_remove(r1, loser);
        self.set_ext(loser, 0);
        let mut touched: BTreeSet<u32> = old_nbrs.iter().map(|&(w, _)| w).collect();
        touched.extend(self.adj[winner as usize].keys().copied());
        touched.insert(winner);
        touched.remove(&loser);
        for v in touched {
            self.recompute_ext(v);
        }
        if self.regions[r1 as usize].members.is_empty() {
            self.set_region_alive(r1, false);
            self.set_watched(r1, Vec::new());
        } else {
            self.refresh_watch(r1);
        }
        self.refresh_watch(r2);
        self.fix_region(r2);
        if r1 != r2 && self.regions[r1 as usize].alive {
            self.fix_region(r1);
        }
    }

    /// Switches to bound `k`: every vertex goes back to its own region and
    /// the current edges are replayed.
    pub fn rebuild(&mut self, k: u32) {
        self.set_bound(Some(k));
        if !self.regions_on {
            for r in self.region_ids() {
                self.refresh_watch(r);
            }
            return;
        }
        for r in self.region_ids() {
            for v in self.members(r) {
                self.member_remove(r, v);
            }
            self.set_watched(r, Vec::new());
            self.set_region_alive(r, false);
        }
        let verts = self.vertices();
        for &v in &verts {
            let r = self.push_region();
            self.set_region_of(v, r);
            self.member_insert(r, v);
        }
        for &v in &verts {
            self.recompute_ext(v);
        }
        for &u in &verts {
            let nbrs: Vec<u32> = self.adj[u as usize].keys().copied().filter(|&w| w > u).collect();
            for w in nbrs {
                let ru = self.region_of(u);
                self.fix_region(ru);
                let rw = self.region_of(w);
                self.fix_region(rw);
            }
        }
        for r in self.region_ids() {
            self.refresh_watch(r);
        }
    }

    // ---- region maintenance ----

    /// Merges `r` with its densest neighbor region until it satisfies the
    /// region condition.
    pub fn fix_region(&mut self, r: u32) {
        while self.regions[r as usize].alive && !self.satisfies_region_condition(r) {
            let size_r = self.regions[r as usize].members.len();
            let mut best: Option<(u32, usize, usize, usize)> = None; // (id, edges, size_other)
            for o in self.region_ids() {
                if o == r {
                    continue;
                }
                let e = self.edges_between(r, o);
                let so = self.regions[o as usize].members.len();
                let better = match best {
                    None => true,
                    Some((_, be, bs, _)) => {
                        // e/(size_r*so) > be/(size_r*bs)  <=>  e*bs > be*so
                        let lhs = e * bs;
                        let rhs = be * so;
                        lhs > rhs || (lhs == rhs && so < bs)
                    }
                };
                if better {
                    best = Some((o, e, so, size_r));
                }
            }
            let Some((o, ..)) = best else { break };
            self.merge_regions(r, o);
        }
    }

    /// Moves every member of `other` into `r`.
    pub fn merge_regions(&mut self, r: u32, other: u32) {
        let moved = self.members(other);
        for &v in &moved {
            self.member_remove(other, v);
            self.set_region_of(v, r);
            self.member_insert(r, v);
        }
        let mut w = self.regions[r as usize].watched.clone();
        w.extend(self.regions[other as usize].watched.iter().copied());
        self.set_watched(other, Vec::new());
        self.set_region_alive(other, false);
        self.set_watched(r, w);
        for v in self.members(r) {
            self.recompute_ext(v);
        }
        self.refresh_watch(r);
    }

    /// Keeps `w(R)` at exactly `k+1` members for large regions: drops stale
    /// entries, truncates by degree, refills with the highest-degree members.
    fn refresh_watch(&mut self, r: u32) {
        let Some(p) = self.param() else {
            self.set_watched(r, Vec::new());
            return;
        };
        let reg = &self.regions[r as usize];
        if !reg.alive || reg.members.len() < p {
            self.set_watched(r, Vec::new());
            return;
        }
        let by_degree = |g: &RegionGraph, v: &u32| (std::cmp::Reverse(g.degree(*v)), *v);
        let mut w: Vec<u32> = reg.watched.iter().copied().filter(|v| reg.members.contains(v)).collect();
        w.dedup();
        if w.len() > p {
            w.sort_by_key(|v| by_degree(self, v));
            w.truncate(p);
        }
        if w.len() < p {
            let mut cand: Vec<u32> = reg.members.iter().copied().filter(|v| !w.contains(v)).collect();
            cand.sort_by_key(|v| by_degree(self, v));
            w.extend(cand.into_iter().take(p - w.len()));
        }
        self.set_watched(r, w);
    }

    /// A large region whose watched set is pairwise connected.
    pub fn find_clique(&self) -> Option<Vec<u32>> {
        let p = self.param()?;
        for r in self.region_ids() {
            let w = &self.regions[r as usize].watched;
            if w.len() == p && w.iter().enumerate().all(|(i, &a)| w[i + 1..].iter().all(|&b| self.adjacent(a, b))) {
                return Some(w.clone());
            }
        }
        None
    }

    /// Two non-adjacent vertices to split on, merging small regions by edge
    /// density until a large region exists. `None` when no such pair exists.
    pub fn split_pair(&mut self) -> Option<(u32, u32)> {
        let p = self.param()?;
        if self.num_vertices() < p {
            return None;
        }
        loop {
            let large: Vec<u32> =
                self.region_ids().into_iter().filter(|&r| self.regions[r as usize].members.len() >= p).collect();
            for &r in &large {
                let w = self.regions[r as usize].watched.clone();
                for i in 0..w.len() {
                    for j in i + 1..w.len() {
                        if !self.adjacent(w[i], w[j]) {
                            return Some((w[i], w[j]));
                        }
                    }
                }
            }
            if !large.is_empty() {
                // Every watched set is a clique; fall back to any missing edge.
                let vs = self.vertices();
                for (i, &a) in vs.iter().enumerate() {
                    for &b in &vs[i + 1..] {
                        if !self.adjacent(a, b) {
                            return Some((a, b));
                        }
                    }
                }
                return None;
            }
            let ids = self.region_ids();
            let mut best: Option<(u32, u32, usize, usize)> = None; // (r1, r2, edges, size product)
            for (i, &a) in ids.iter().enumerate() {
                for &b in &ids[i + 1..] {
                    let e = self.edges_between(a, b);
                    let sz = self.regions[a as usize].members.len() * self.regions[b as usize].members.len();
                    let comb = self.regions[a as usize].members.len() + self.regions[b as usize].members.len();
                    let better = match best {
                        None => true,
                        Some((ba, bb, be, bsz)) => {
                            let bcomb = self.regions[ba as usize].members.len() + self.regions[bb as usize].members.len();
                            let (lhs, rhs) = (e * bsz, be * sz);
                            lhs > rhs || (lhs == rhs && comb < bcomb)
                        }
                    };
                    if better {
                        best = Some((a, b, e, sz));
                    }
                }
            }
            let (a, b, ..) = best?;
            self.merge_regions(a, b);
            self.fix_region(a);
        }
    }

    pub fn fingerprint(&self) -> Fingerprint {
        let vertices = self.vertices().into_iter().map(|v| (v, self.region_of(v), self.ext(v))).collect();
        let regions = self
            .region_ids()
            .into_iter()
            .map(|r| (r, self.members(r), self.regions[r as usize].watched.clone()))
            .collect();
        let mut edges = Vec::new();
        for v in self.vertices() {
            for (&w, &m) in &self.adj[v as usize] {
                if v < w {
                    edges.push((v, w, m));
                }
            }
        }
        Fingerprint { bound: self.bound, vertices, regions, edges }
    }

    /// Checks every structural invariant; returns a description of the first
    /// violation.
    pub fn audit(&self) -> Result<(), String> {
        let verts = self.vertices();
        let mut covered = BTreeSet::new();
        for r in self.region_ids() {
            for &v in &self.regions[r as usize].members {
                if !self.is_alive(v) {
                    return Err(format!("dead vertex {v} in region {r}"));
                }
                if self.region_of(v) != r {
                    return Err(format!("vertex {v} listed in region {r} but mapped elsewhere"));
                }
                if !covered.insert(v) {
                    return Err(format!("vertex {v} in two regions"));
                }
            }
            if !self.satisfies_region_condition(r) {
                return Err(format!("region {r} violates the region condition"));
            }
            if let Some(p) = self.param() {
                let reg = &self.regions[r as usize];
                if reg.members.len() >= p {
                    if reg.watched.len() != p || !reg.watched.iter().all(|v| reg.members.contains(v)) {
                        return Err(format!("region {r} has a bad watched set"));
                    }
                } else if !reg.watched.is_empty() {
                    return Err(format!("small region {r} has watches"));
                }
            }
            if !self.regions_on && self.region_ids().len() > 1 {
                return Err("more than one region with regions disabled".into());
            }
        }
        if covered.len() != verts.len() {
            return Err("partition does not cover every vertex".into());
        }
        for &v in &verts {
            if self.ext(v) != self.ext_in(v, self.region_of(v)) {
                return Err(format!("stale ext count at {v}"));
            }
            for &w in self.adj[v as usize].keys() {
                if !self.is_alive(w) || self.adj[w as usize].get(&v) != self.adj[v as usize].get(&w) {
                    return Err(format!("asymmetric or dangling edge {v}-{w}"));
                }
            }
        }
        Ok(())
    }
}
