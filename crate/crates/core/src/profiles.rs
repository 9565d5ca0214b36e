//! Exact isoperimetric profiles by enumeration, increasing minorants and the
//! structural checks (Lipschitz, trimming, subadditivity, padding).
//!
//! Infinite families: connected classes are enumerated with Redelmeier's
//! untried-set recursion inside a word ball, then a subadditive DP over far-apart
//! unions recovers disconnected minimizers. Finite graphs fall back to raw subset search.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cayley::{
    edge_boundary, vertex_boundary, EdgeMode, Family, GroupGraph, IndexedBall, Vertex, VertexSet,
    OUTSIDE,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// Outer vertex boundary `|SY \ Y|`.
    Vertex,
    /// Directed edge boundary `#{(y,s): ys not in Y}`.
    DirectedEdge,
}

#[derive(Clone, Copy, Debug)]
pub struct Budget {
    pub max_ball: usize,
    pub max_nodes: u64,
    /// Enable the projection lower-bound pruning (axis stencils only).
    pub prune: bool,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_ball: 200_000, max_nodes: 400_000_000, prune: true }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileTable {
    pub normalization: Normalization,
    /// `values[r-1] = I(r)`.
    pub values: Vec<u64>,
    pub minorant: Vec<u64>,
    pub witnesses: Vec<VertexSet>,
    /// The minorant is a suffix-min over the window only (an upper bound on the true one).
    pub window_truncated: bool,
}

/// Minimum boundary over connected sets containing the identity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConnectedMinTable {
    pub normalization: Normalization,
    pub values: Vec<u64>,
    pub witnesses: Vec<VertexSet>,
    pub nodes: u64,
}

/// Suffix minimum over the window.
pub fn suffix_min(values: &[u64]) -> Vec<u64> {
    let mut out = values.to_vec();
    for i in (0..out.len().saturating_sub(1)).rev() {
        out[i] = out[i].min(out[i + 1]);
    }
    out
}

impl ProfileTable {
    pub fn from_values(
        normalization: Normalization,
        values: Vec<u64>,
        witnesses: Vec<VertexSet>,
    ) -> Self {
        let minorant = suffix_min(&values);
        ProfileTable { normalization, values, minorant, witnesses, window_truncated: true }
    }

    pub fn r_max(&self) -> usize {
        self.values.len()
    }

    /// `I(r)` for `1 <= r <= r_max`.
    pub fn value(&self, r: usize) -> u64 {
        self.values[r - 1]
    }

    pub fn minorant_at(&self, r: usize) -> u64 {
        self.minorant[r - 1]
    }

    pub fn ratio(&self, r: usize) -> f64 {
        let m = self.minorant_at(r);
        if m == 0 {
            1.0
        } else {
            self.value(r) as f64 / m as f64
        }
    }
}

/// Boundary of a set under the chosen normalization (right action).
pub fn boundary_value(graph: &GroupGraph, y: &VertexSet, norm: Normalization) -> Result<u64> {
    match norm {
        Normalization::Vertex => Ok(vertex_boundary(graph, y)?.len() as u64),
        Normalization::DirectedEdge => edge_boundary(graph, y, EdgeMode::DirectedPairs),
    }
}

fn is_axis_stencil(graph: &GroupGraph) -> Option<usize> {
    if let Family::Zd { stencil } = graph.family() {
        let d = stencil[0].len();
        let ok = stencil.len() == 2 * d
            && stencil.iter().all(|v| v.iter().filter(|&&x| x != 0).count() == 1)
            && stencil.iter().all(|v| v.iter().all(|&x| x.abs() <= 1));
        if ok {
            return Some(d);
        }
    }
    None
}

/// Whether the vertex ordering is left-invariant for this family, so that
/// restricting to sets whose minimum is the identity picks one set per left translate.
fn has_invariant_order(graph: &GroupGraph) -> bool {
    matches!(graph.family(), Family::Zd { .. } | Family::Heisenberg | Family::Step2 { .. })
}

struct Search<'a> {
    ball: &'a IndexedBall,
    conn: Vec<Vec<u32>>,
    allowed: Vec<bool>,
    rank: Vec<u32>,
    norm: Normalization,
    deg: i64,
    r_max: usize,
    lines: Option<(Vec<Vec<u32>>, usize)>,
    nodes: &'a AtomicU64,
    max_nodes: u64,
    /// Upper bounds on the connected minimum per size, from greedy sets.
    caps: Vec<u64>,
}

type Best = Vec<Option<(u64, Vec<u32>)>>;

#[derive(Clone)]
struct State {
    in_set: Vec<bool>,
    cnt: Vec<u16>,
    mark: Vec<bool>,
    members: Vec<u32>,
    bnd: i64,
    line_cnt: Vec<Vec<u16>>,
    /// Nonempty axis-parallel lines per axis.
    nonempty_lines: Vec<i64>,
    best: Best,
    local_nodes: u64,
}

impl<'a> Search<'a> {
    fn new_state(&self) -> State {
        let n = self.ball.len();
        let line_cnt = match &self.lines {
            Some((l, nl)) => vec![vec![0u16; *nl]; l[0].len()],
            None => vec![],
        };
        State {
            in_set: vec![false; n],
            cnt: vec![0; n],
            mark: vec![false; n],
            members: Vec::with_capacity(self.r_max),
            bnd: 0,
            nonempty_lines: vec![0; line_cnt.len()],
            line_cnt,
            best: vec![None; self.r_max + 1],
            local_nodes: 0,
        }
    }

    fn add(&self, st: &mut State, v: u32) -> Result<()> {
        let vi = v as usize;
        match self.norm {
            Normalization::DirectedEdge => {
                st.bnd += self.deg - 2 * i64::from(st.cnt[vi]);
            }
            Normalization::Vertex => {
                if st.cnt[vi] > 0 {
                    st.bnd -= 1;
                }
            }
        }
        st.in_set[vi] = true;
        for &u in &self.ball.adj[vi] {
            if u == OUTSIDE {
                return Err(Error::Resource("enumeration left the word ball".into()));
            }
            let ui = u as usize;
            if self.norm == Normalization::Vertex && !st.in_set[ui] && st.cnt[ui] == 0 {
                st.bnd += 1;
            }
            st.cnt[ui] += 1;
        }
        if let Some((lines, _)) = &self.lines {
            for (ax, &l) in lines[vi].iter().enumerate() {
                if st.line_cnt[ax][l as usize] == 0 {
                    st.nonempty_lines[ax] += 1;
                }
                st.line_cnt[ax][l as usize] += 1;
            }
        }
        st.members.push(v);
        Ok(())
    }

    fn remove(&self, st: &mut State, v: u32) {
        let vi = v as usize;
        st.members.pop();
        if let Some((lines, _)) = &self.lines {
            for (ax, &l) in lines[vi].iter().enumerate() {
                st.line_cnt[ax][l as usize] -= 1;
                if st.line_cnt[ax][l as usize] == 0 {
                    st.nonempty_lines[ax] -= 1;
                }
            }
        }
        for &u in &self.ball.adj[vi] {
            let ui = u as usize;
            st.cnt[ui] -= 1;
            if self.norm == Normalization::Vertex && !st.in_set[ui] && st.cnt[ui] == 0 {
                st.bnd -= 1;
            }
        }
        st.in_set[vi] = false;
        match self.norm {
            Normalization::DirectedEdge => {
                st.bnd -= self.deg - 2 * i64::from(st.cnt[vi]);
            }
            Normalization::Vertex => {
                if st.cnt[vi] > 0 {
                    st.bnd += 1;
                }
            }
        }
    }

    fn record(&self, st: &mut State) {
        let k = st.members.len();
        let val = st.bnd as u64;
        let better = match &st.best[k] {
            None => true,
            Some((b, _)) if val < *b => true,
            Some((b, w)) if val == *b => {
                let key = self.key(&st.members);
                key < *w
            }
            _ => false,
        };
        if better {
            let key = self.key(&st.members);
            st.best[k] = Some((val, key));
        }
    }

    fn key(&self, members: &[u32]) -> Vec<u32> {
        let mut k: Vec<u32> = members.iter().map(|&m| self.rank[m as usize]).collect();
        k.sort_unstable();
        k
    }

    fn pruned(&self, st: &State) -> bool {
        if self.lines.is_none() {
            return false;
        }
        let k = st.members.len();
        let mut cap = 0u64;
        for s in (k + 1)..=self.r_max {
            let found = st.best[s].as_ref().map_or(u64::MAX, |(b, _)| *b);
            cap = cap.max(found.min(self.caps[s]));
        }
        // each nonempty line leaves the set at both ends: two boundary edges, or two
        // outer vertices on that line (distinct lines of one axis give distinct vertices)
        let lines = match self.norm {
            Normalization::DirectedEdge => st.nonempty_lines.iter().sum::<i64>(),
            Normalization::Vertex => st.nonempty_lines.iter().copied().max().unwrap_or(0),
        };
        (2 * lines) as u64 > cap
    }

    /// Grow a connected set from the identity, always adding the cheapest candidate.
    /// Connected minima are translation invariant, so these values bound them from above.
    fn greedy_caps(&self) -> Result<Vec<u64>> {
        let mut caps = vec![u64::MAX; self.r_max + 1];
        let mut st = self.new_state();
        self.add(&mut st, 0)?;
        caps[1] = st.bnd as u64;
        for k in 2..=self.r_max {
            let mut cands: Vec<u32> = st.members.iter().flat_map(|&m| self.conn[m as usize].iter().copied()).collect();
            cands.sort_unstable();
            cands.dedup();
            cands.retain(|&v| !st.in_set[v as usize]);
            let mut pick: Option<(i64, u32, u32)> = None;
            for v in cands {
                self.add(&mut st, v)?;
                let key = (st.bnd, self.rank[v as usize], v);
                self.remove(&mut st, v);
                if pick.is_none_or(|p| key < p) {
                    pick = Some(key);
                }
            }
            let Some((_, _, v)) = pick else { break };
            self.add(&mut st, v)?;
            caps[k] = st.bnd as u64;
        }
        Ok(caps)
    }

    fn recurse(&self, st: &mut State, untried: &mut Vec<u32>) -> Result<()> {
        let mut work: Vec<u32> = std::mem::take(untried);
        while let Some(v) = work.pop() {
            st.local_nodes += 1;
            if st.local_nodes.is_multiple_of(4096) {
                let total = self.nodes.fetch_add(4096, Ordering::Relaxed) + 4096;
                if total > self.max_nodes {
                    return Err(Error::Resource(format!(
                        "profile enumeration exceeded {} nodes",
                        self.max_nodes
                    )));
                }
            }
            self.add(st, v)?;
            self.record(st);
            if st.members.len() < self.r_max && !self.pruned(st) {
                let mut fresh = Vec::new();
                for &w in &self.conn[v as usize] {
                    let wi = w as usize;
                    if self.allowed[wi] && !st.mark[wi] {
                        st.mark[wi] = true;
                        fresh.push(w);
                    }
                }
                let mut next = work.clone();
                next.extend_from_slice(&fresh);
                self.recurse(st, &mut next)?;
                for &w in &fresh {
                    st.mark[w as usize] = false;
                }
            }
            self.remove(st, v);
        }
        Ok(())
    }
}

fn connectivity(ball: &IndexedBall, norm: Normalization) -> Vec<Vec<u32>> {
    match norm {
        Normalization::DirectedEdge => ball
            .adj
            .iter()
            .map(|nb| {
                let mut v: Vec<u32> = nb.iter().copied().filter(|&u| u != OUTSIDE).collect();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect(),
        Normalization::Vertex => (0..ball.len())
            .map(|i| {
                let mut v: Vec<u32> = Vec::new();
                for &u in &ball.adj[i] {
                    if u == OUTSIDE {
                        continue;
                    }
                    v.push(u);
                    for &w in &ball.adj[u as usize] {
                        if w != OUTSIDE && w as usize != i {
                            v.push(w);
                        }
                    }
                }
                v.sort_unstable();
                v.dedup();
                v.retain(|&u| u as usize != i);
                v
            })
            .collect(),
    }
}

/// Minimum boundary over connected sets containing the identity, sizes `1..=r_max`.
///
/// Connectivity is through `S` for edge boundaries and through distance `<= 2` for
/// vertex boundaries; both boundaries are additive over the corresponding components.
pub fn connected_minima(
    graph: &GroupGraph,
    r_max: usize,
    norm: Normalization,
    budget: Budget,
) -> Result<ConnectedMinTable> {
    if !graph.is_infinite() {
        return Err(Error::Unsupported("connected minima need an infinite transitive family".into()));
    }
    if r_max == 0 {
        return Err(Error::Invalid("r_max must be positive".into()));
    }
    let radius = match norm {
        Normalization::DirectedEdge => r_max,
        Normalization::Vertex => 2 * r_max - 1,
    };
    let ball = IndexedBall::build(graph, radius, budget.max_ball)?;
    let conn = connectivity(&ball, norm);
    let e = graph.identity();
    let allowed: Vec<bool> = if has_invariant_order(graph) {
        ball.verts.iter().map(|v| *v >= e).collect()
    } else {
        vec![true; ball.len()]
    };
    let mut order: Vec<u32> = (0..ball.len() as u32).collect();
    order.sort_by(|&a, &b| ball.verts[a as usize].cmp(&ball.verts[b as usize]));
    let mut rank = vec![0u32; ball.len()];
    for (i, &v) in order.iter().enumerate() {
        rank[v as usize] = i as u32;
    }
    let lines = if budget.prune {
        is_axis_stencil(graph).map(|d| line_ids(&ball, d))
    } else {
        None
    };
    let nodes = AtomicU64::new(0);
    let search = Search {
        ball: &ball,
        conn,
        allowed,
        rank,
        norm,
        deg: graph.degree() as i64,
        r_max,
        lines,
        nodes: &nodes,
        max_nodes: budget.max_nodes,
        caps: vec![u64::MAX; r_max + 1],
    };
    let mut search = search;
    if search.lines.is_some() {
        search.caps = search.greedy_caps()?;
    }

    // root state: identity chosen, its admissible neighbors are the initial untried set
    let mut root = search.new_state();
    search.add(&mut root, 0)?;
    search.record(&mut root);
    root.mark[0] = true;
    let mut untried = Vec::new();
    for &w in &search.conn[0] {
        if search.allowed[w as usize] {
            root.mark[w as usize] = true;
            untried.push(w);
        }
    }
    let branches: Vec<usize> = if r_max > 1 { (0..untried.len()).collect() } else { vec![] };
    let results: Vec<Result<Best>> = branches
        .par_iter()
        .map(|&b| {
            // branch b pops untried[len-1-b]; earlier pops stay marked
            let mut st = root.clone();
            let keep = untried.len() - 1 - b;
            let v = untried[keep];
            let mut rest: Vec<u32> = untried[..keep].to_vec();
            st.local_nodes += 1;
            search.add(&mut st, v)?;
            search.record(&mut st);
            if st.members.len() < r_max {
                let mut fresh = Vec::new();
                for &w in &search.conn[v as usize] {
                    let wi = w as usize;
                    if search.allowed[wi] && !st.mark[wi] {
                        st.mark[wi] = true;
                        fresh.push(w);
                    }
                }
                rest.extend_from_slice(&fresh);
                search.recurse(&mut st, &mut rest)?;
            }
            nodes.fetch_add(st.local_nodes % 4096, Ordering::Relaxed);
            Ok(st.best)
        })
        .collect();
    let mut best = root.best.clone();
    for r in results {
        let b = r?;
        for k in 1..=r_max {
            if let Some((v, w)) = &b[k] {
                let better = match &best[k] {
                    None => true,
                    Some((bv, bw)) => (v, w) < (bv, bw),
                };
                if better {
                    best[k] = Some((*v, w.clone()));
                }
            }
        }
    }
    let mut values = Vec::with_capacity(r_max);
    let mut witnesses = Vec::with_capacity(r_max);
    for k in 1..=r_max {
        let (v, key) = best[k]
            .clone()
            .ok_or_else(|| Error::Resource(format!("no connected set of size {k} found")))?;
        values.push(v);
        witnesses.push(key.iter().map(|&rk| ball.verts[order[rk as usize] as usize].clone()).collect());
    }
    Ok(ConnectedMinTable {
        normalization: norm,
        values,
        witnesses,
        nodes: nodes.load(Ordering::Relaxed) + 1,
    })
}

fn line_ids(ball: &IndexedBall, d: usize) -> (Vec<Vec<u32>>, usize) {
    use std::collections::HashMap;
    let mut maps: Vec<HashMap<Vec<i64>, u32>> = vec![HashMap::new(); d];
    let mut out = Vec::with_capacity(ball.len());
    let mut max_lines = 0usize;
    for v in &ball.verts {
        let mut ids = Vec::with_capacity(d);
        for (ax, map) in maps.iter_mut().enumerate() {
            let key: Vec<i64> =
                v.0.iter().enumerate().filter(|(i, _)| *i != ax).map(|(_, x)| *x).collect();
            let n = map.len() as u32;
            let id = *map.entry(key).or_insert(n);
            ids.push(id);
            max_lines = max_lines.max(map.len());
        }
        out.push(ids);
    }
    (out, max_lines)
}

/// Exact profile on the window `1..=r_max`.
pub fn exact_profile(
    graph: &GroupGraph,
    r_max: usize,
    norm: Normalization,
    budget: Budget,
) -> Result<ProfileTable> {
    if graph.is_infinite() {
        let conn = connected_minima(graph, r_max, norm, budget)?;
        Ok(subadditive_closure(graph, &conn)?)
    } else {
        finite_profile(graph, r_max, norm, budget)
    }
}

/// `I(r) = min(c(r), min_k I(k) + I(r-k))`, realised by far-apart unions.
pub fn subadditive_closure(graph: &GroupGraph, conn: &ConnectedMinTable) -> Result<ProfileTable> {
    let r_max = conn.values.len();
    let mut values: Vec<u64> = Vec::with_capacity(r_max);
    let mut witnesses: Vec<VertexSet> = Vec::with_capacity(r_max);
    let far = far_element(graph, 4 * r_max + 8)?;
    for r in 1..=r_max {
        let mut best_v = conn.values[r - 1];
        let mut best_w = conn.witnesses[r - 1].clone();
        for k in 1..r {
            let cand = values[k - 1] + values[r - k - 1];
            if cand < best_v {
                let shifted = witnesses[r - k - 1].translate_left(graph, &far)?;
                best_v = cand;
                best_w = witnesses[k - 1].union(&shifted);
            }
        }
        values.push(best_v);
        witnesses.push(best_w);
    }
    let minorant = suffix_min(&values);
    Ok(ProfileTable { normalization: conn.normalization, values, minorant, witnesses, window_truncated: true })
}

fn far_element(graph: &GroupGraph, n: usize) -> Result<Vertex> {
    let g = graph.generator_element(0).clone();
    let mut acc = graph.identity();
    for _ in 0..n {
        acc = graph.mul(&acc, &g)?;
    }
    Ok(acc)
}

/// Raw subset search for finite graphs (tori, explicit graphs).
fn finite_profile(
    graph: &GroupGraph,
    r_max: usize,
    norm: Normalization,
    budget: Budget,
) -> Result<ProfileTable> {
    let verts: Vec<Vertex> = match graph.family() {
        Family::Explicit { adjacency } => (0..adjacency.len()).map(|i| Vertex(vec![i as i64])).collect(),
        Family::Torus { d, m } => {
            let ball = IndexedBall::build(graph, d * (*m as usize), budget.max_ball)?;
            let mut v = ball.verts;
            v.sort();
            v
        }
        _ => unreachable!(),
    };
    let n = verts.len();
    if r_max > n {
        return Err(Error::Invalid(format!("window {r_max} exceeds graph order {n}")));
    }
    let mut total: f64 = 0.0;
    for r in 1..=r_max {
        total += binom_f(n, r);
    }
    if total > budget.max_nodes as f64 {
        return Err(Error::Resource(format!("{total:.0} subsets exceed the node budget")));
    }
    let index: std::collections::HashMap<Vertex, usize> =
        verts.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
    let adj: Vec<Vec<usize>> = verts
        .iter()
        .map(|v| {
            graph
                .right_neighbors(v)
                .map(|nb| nb.into_iter().map(|(_, w)| index[&w]).collect())
        })
        .collect::<Result<_>>()?;
    let mut values = Vec::new();
    let mut witnesses = Vec::new();
    for r in 1..=r_max {
        let mut comb: Vec<usize> = (0..r).collect();
        let mut best: Option<(u64, Vec<usize>)> = None;
        let mut in_set = vec![false; n];
        loop {
            for &c in &comb {
                in_set[c] = true;
            }
            let val = match norm {
                Normalization::DirectedEdge => comb
                    .iter()
                    .map(|&c| adj[c].iter().filter(|&&w| !in_set[w]).count() as u64)
                    .sum(),
                Normalization::Vertex => {
                    let mut seen = vec![false; n];
                    let mut cnt = 0u64;
                    for &c in &comb {
                        for &w in &adj[c] {
                            if !in_set[w] && !seen[w] {
                                seen[w] = true;
                                cnt += 1;
                            }
                        }
                    }
                    cnt
                }
            };
            if best.as_ref().is_none_or(|(b, _)| val < *b) {
                best = Some((val, comb.clone()));
            }
            for &c in &comb {
                in_set[c] = false;
            }
            if !next_combination(&mut comb, n) {
                break;
            }
        }
        let (v, w) = best.expect("nonempty");
        values.push(v);
        witnesses.push(w.iter().map(|&i| verts[i].clone()).collect());
    }
    let minorant = suffix_min(&values);
    Ok(ProfileTable { normalization: norm, values, minorant, witnesses, window_truncated: true })
}

fn binom_f(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Advance to the next k-combination of `0..n` in lexicographic order.
pub fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if comb[i] < n - k + i {
            comb[i] += 1;
            for j in (i + 1)..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LipschitzReport {
    /// `(r, I(r+1) - I(r))`.
    pub steps: Vec<(usize, i64)>,
    pub max_step: u64,
    pub violations: Vec<usize>,
    /// Sizes where removal fails: `I(r) > I(r+1) + c` with `c = 1` (vertex) or `Δ` (edge).
    pub reverse_violations: Vec<usize>,
}

impl LipschitzReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.reverse_violations.is_empty()
    }
}

pub fn check_lipschitz(table: &ProfileTable, degree: usize) -> LipschitzReport {
    let delta = degree as i64;
    let removal = match table.normalization {
        Normalization::Vertex => 1,
        Normalization::DirectedEdge => delta,
    };
    let mut steps = Vec::new();
    let mut violations = Vec::new();
    let mut reverse_violations = Vec::new();
    let mut max_step = 0u64;
    for r in 1..table.r_max() {
        let a = table.value(r) as i64;
        let b = table.value(r + 1) as i64;
        steps.push((r, b - a));
        max_step = max_step.max((b - a).unsigned_abs());
        if (b - a).abs() > delta {
            violations.push(r);
        }
        if a > b + removal {
            reverse_violations.push(r);
        }
    }
    LipschitzReport { steps, max_step, violations, reverse_violations }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TrimSubaddReport {
    /// `(r, s)` with `I(r) > I(s) + c (s - r)`.
    pub trim_violations: Vec<(usize, usize)>,
    /// `(r1, r2)` with `I(r1 + r2) > I(r1) + I(r2)`.
    pub subadd_violations: Vec<(usize, usize)>,
    pub pairs_checked: usize,
}

impl TrimSubaddReport {
    pub fn passed(&self) -> bool {
        self.trim_violations.is_empty() && self.subadd_violations.is_empty()
    }
}

pub fn check_trim_subadd(table: &ProfileTable, degree: usize) -> TrimSubaddReport {
    let c = match table.normalization {
        Normalization::Vertex => 1u64,
        Normalization::DirectedEdge => degree as u64,
    };
    let n = table.r_max();
    let mut rep = TrimSubaddReport::default();
    for r in 1..=n {
        for s in r..=n {
            rep.pairs_checked += 1;
            if table.value(r) > table.value(s) + c * (s - r) as u64 {
                rep.trim_violations.push((r, s));
            }
        }
    }
    for r1 in 1..=n {
        for r2 in r1..=n.saturating_sub(r1) {
            rep.pairs_checked += 1;
            if table.value(r1 + r2) > table.value(r1) + table.value(r2) {
                rep.subadd_violations.push((r1, r2));
            }
        }
    }
    rep
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioScan {
    pub max_ratio: f64,
    pub argmax: usize,
    pub ratios: Vec<f64>,
}

pub fn ratio_scan(table: &ProfileTable) -> Result<RatioScan> {
    if table.minorant.iter().all(|&m| m == 0) {
        return Err(Error::Degenerate("minorant vanishes on the whole window".into()));
    }
    let ratios: Vec<f64> = (1..=table.r_max()).map(|r| table.ratio(r)).collect();
    let (mut argmax, mut max_ratio) = (1, f64::NEG_INFINITY);
    for (i, &q) in ratios.iter().enumerate() {
        if q > max_ratio {
            max_ratio = q;
            argmax = i + 1;
        }
    }
    Ok(RatioScan { max_ratio, argmax, ratios })
}

/// Add `k` vertices to `Y`, taking boundary vertices first (smallest first).
pub fn padding(graph: &GroupGraph, y: &VertexSet, k: usize) -> Result<VertexSet> {
    let mut z = y.clone();
    let mut added = 0;
    while added < k {
        let bd = vertex_boundary(graph, &z)?;
        let next = match bd.iter().next() {
            Some(v) => v.clone(),
            None => {
                // no boundary: either Y is empty or a whole finite component is filled
                let cand = match graph.family() {
                    Family::Explicit { adjacency } => (0..adjacency.len())
                        .map(|i| Vertex(vec![i as i64]))
                        .find(|v| !z.contains(v)),
                    Family::Torus { d, m } => IndexedBall::build(graph, d * (*m as usize), 1 << 24)?
                        .verts
                        .into_iter()
                        .find(|v| !z.contains(v)),
                    _ => Some(graph.identity()).filter(|v| !z.contains(v)),
                };
                cand.ok_or_else(|| Error::Capacity("no vertex left to add".into()))?
            }
        };
        z.insert(next);
        added += 1;
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2() -> GroupGraph {
        GroupGraph::zd_axis(2)
    }

    #[test]
    fn small_z2_edge_values() {
        let t = exact_profile(&z2(), 6, Normalization::DirectedEdge, Budget::default()).unwrap();
        assert_eq!(&t.values[..4], &[4, 6, 8, 8]);
        for r in 1..=6 {
            let w = &t.witnesses[r - 1];
            assert_eq!(w.len(), r);
            assert_eq!(boundary_value(&z2(), w, t.normalization).unwrap(), t.value(r));
        }
    }

    #[test]
    fn pruning_does_not_change_values() {
        let mut b = Budget::default();
        let a = exact_profile(&z2(), 9, Normalization::DirectedEdge, b).unwrap();
        b.prune = false;
        let c = exact_profile(&z2(), 9, Normalization::DirectedEdge, b).unwrap();
        assert_eq!(a.values, c.values);
        assert_eq!(a.witnesses, c.witnesses);
    }

    #[test]
    fn vertex_pruning_does_not_change_values() {
        let mut b = Budget::default();
        let a = exact_profile(&z2(), 8, Normalization::Vertex, b).unwrap();
        b.prune = false;
        let c = exact_profile(&z2(), 8, Normalization::Vertex, b).unwrap();
        assert_eq!(a.values, c.values);
        assert_eq!(a.witnesses, c.witnesses);
    }

    #[test]
    fn vertex_profile_small() {
        let t = exact_profile(&z2(), 5, Normalization::Vertex, Budget::default()).unwrap();
        assert_eq!(&t.values[..4], &[4, 6, 7, 8]);
    }

    #[test]
    fn dp_matches_box_search() {
        // every set of size r <= 5 inside a 5x5 box
        let g = z2();
        let t = exact_profile(&g, 5, Normalization::DirectedEdge, Budget::default()).unwrap();
        let pts: Vec<Vertex> =
            (0..5).flat_map(|x| (0..5).map(move |y| Vertex(vec![x, y]))).collect();
        for r in 1..=5 {
            let mut comb: Vec<usize> = (0..r).collect();
            let mut best = u64::MAX;
            loop {
                let y: VertexSet = comb.iter().map(|&i| pts[i].clone()).collect();
                best = best.min(edge_boundary(&g, &y, EdgeMode::DirectedPairs).unwrap());
                if !next_combination(&mut comb, pts.len()) {
                    break;
                }
            }
            assert_eq!(best, t.value(r), "r = {r}");
        }
    }

    #[test]
    fn singleton_is_degree() {
        for g in [GroupGraph::heisenberg(), GroupGraph::lamplighter(1), z2()] {
            let t = exact_profile(&g, 1, Normalization::DirectedEdge, Budget::default()).unwrap();
            assert_eq!(t.value(1), g.degree() as u64);
        }
    }

    #[test]
    fn torus_profile_uses_subsets() {
        let g = GroupGraph::torus(2, 3);
        let t = exact_profile(&g, 4, Normalization::DirectedEdge, Budget::default()).unwrap();
        assert_eq!(t.value(1), 4);
        assert_eq!(t.value(3), 6); // a full cycle around the torus
    }

    #[test]
    fn ratio_and_minorant() {
        let t = ProfileTable::from_values(Normalization::DirectedEdge, vec![3, 5, 2, 4], vec![]);
        assert_eq!(t.minorant, vec![2, 2, 2, 4]);
        let s = ratio_scan(&t).unwrap();
        assert_eq!(s.argmax, 2);
        assert!((s.max_ratio - 2.5).abs() < 1e-12);
        let z = ProfileTable::from_values(Normalization::DirectedEdge, vec![0, 0], vec![]);
        assert!(ratio_scan(&z).is_err());
    }

    #[test]
    fn padding_singleton() {
        let g = z2();
        let y: VertexSet = [Vertex(vec![0, 0])].into_iter().collect();
        let z = padding(&g, &y, 1).unwrap();
        assert_eq!(z.len(), 2);
        assert!(edge_boundary(&g, &z, EdgeMode::DirectedPairs).unwrap() <= 8);
        assert_eq!(padding(&g, &y, 0).unwrap(), y);
        let tiny = GroupGraph::explicit(vec![vec![1], vec![0]]).unwrap();
        let full: VertexSet = [Vertex(vec![0]), Vertex(vec![1])].into_iter().collect();
        assert!(matches!(padding(&tiny, &full, 1), Err(Error::Capacity(_))));
    }

    #[test]
    fn lipschitz_trivial_window() {
        let t = ProfileTable::from_values(Normalization::Vertex, vec![4], vec![]);
        assert!(check_lipschitz(&t, 4).passed());
    }
}
