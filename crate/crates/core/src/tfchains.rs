//! Tempered Følner chains: verification, canonical and interleaved constructions,
//! lamplighter block counts, layer-nested sets in `Z^d ⋊_A Z`, and the balloon chain.

use std::collections::HashSet;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cayley::{
    self, edge_boundary_with, vertex_boundary, Action, EdgeMode, Family, GroupGraph, IntMatrix, Vertex, VertexSet,
};
use crate::error::{Error, Result};
use crate::profiles::{self, Normalization, ProfileTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub size: usize,
    pub vertex_boundary: u64,
    pub edge_boundary: u64,
    /// `|F_{n+1} ∖ F_n|`, zero for the last set.
    pub increment: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Chain {
    pub sets: Vec<VertexSet>,
    pub records: Vec<StepRecord>,
}

fn record(graph: &GroupGraph, y: &VertexSet) -> Result<StepRecord> {
    Ok(StepRecord {
        size: y.len(),
        vertex_boundary: vertex_boundary(graph, y)?.len() as u64,
        edge_boundary: edge_boundary_with(graph, y, EdgeMode::DirectedPairs, Action::Right)?,
        increment: 0,
    })
}

impl Chain {
    pub fn from_sets(graph: &GroupGraph, sets: Vec<VertexSet>) -> Result<Self> {
        let mut records: Vec<StepRecord> = sets.par_iter().map(|y| record(graph, y)).collect::<Result<_>>()?;
        for i in 0..sets.len().saturating_sub(1) {
            records[i].increment = sets[i + 1].difference(&sets[i]).len();
        }
        Ok(Self { sets, records })
    }

    pub fn is_nested(&self) -> bool {
        self.sets.windows(2).all(|w| w[0].is_subset(&w[1]))
    }

    /// One JSON array of vertex encodings per set.
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for s in &self.sets {
            let coords: Vec<&Vec<i64>> = s.iter().map(|v| &v.0).collect();
            out.push_str(&serde_json::to_string(&coords).map_err(|e| Error::Encoding(e.to_string()))?);
            out.push('\n');
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TfReport {
    pub normalization: Normalization,
    pub degree: usize,
    /// `max |∂F_n| / I^incr(|F_n|)` over steps inside the profile window.
    pub a_observed: Option<f64>,
    /// `max |F_{n+1} ∖ F_n| / |∂F_n|`.
    pub b_observed: Option<f64>,
    pub folner_ratios: Vec<f64>,
    pub steps_in_window: usize,
    /// Some step lies beyond the profile window, so clause (i) is partial.
    pub window_truncated: bool,
    pub nested: bool,
    /// Steps whose stored record disagrees with recomputation.
    pub record_mismatches: Vec<usize>,
    /// `A + ΔAB`.
    pub ratio_bound: Option<f64>,
    /// Profile ratio on the window stays below `A + ΔAB`.
    pub ratio_bound_holds: Option<bool>,
}

impl TfReport {
    pub fn consistent(&self) -> bool {
        self.nested && self.record_mismatches.is_empty()
    }
}

/// Check both TF clauses on a chain, recomputing every boundary.
pub fn verify_tf(graph: &GroupGraph, chain: &Chain, profile: &ProfileTable) -> Result<TfReport> {
    let norm = profile.normalization;
    let fresh = Chain::from_sets(graph, chain.sets.clone())?;
    let record_mismatches = (0..chain.sets.len())
        .filter(|&i| chain.records.get(i) != fresh.records.get(i))
        .collect();
    let bd = |r: &StepRecord| match norm {
        Normalization::Vertex => r.vertex_boundary,
        Normalization::DirectedEdge => r.edge_boundary,
    };
    let (mut a_obs, mut b_obs): (Option<f64>, Option<f64>) = (None, None);
    let mut in_window = 0;
    let mut truncated = false;
    for (i, r) in fresh.records.iter().enumerate() {
        if r.size >= 1 && r.size <= profile.r_max() {
            in_window += 1;
            let m = profile.minorant_at(r.size);
            if m > 0 {
                let a = bd(r) as f64 / m as f64;
                a_obs = Some(a_obs.map_or(a, |x| x.max(a)));
            }
        } else {
            truncated = true;
        }
        if i + 1 < fresh.records.len() && bd(r) > 0 {
            let b = r.increment as f64 / bd(r) as f64;
            b_obs = Some(b_obs.map_or(b, |x| x.max(b)));
        }
    }
    let degree = graph.degree();
    let ratio_bound = match (a_obs, b_obs) {
        (Some(a), Some(b)) => Some(a + degree as f64 * a * b),
        _ => None,
    };
    let ratio_bound_holds = ratio_bound.map(|bound| (1..=profile.r_max()).all(|r| profile.ratio(r) <= bound + 1e-12));
    Ok(TfReport {
        normalization: norm,
        degree,
        a_observed: a_obs,
        b_observed: b_obs,
        folner_ratios: fresh.records.iter().map(|r| bd(r) as f64 / r.size.max(1) as f64).collect(),
        steps_in_window: in_window,
        window_truncated: truncated,
        nested: fresh.is_nested(),
        record_mismatches,
        ratio_bound,
        ratio_bound_holds,
    })
}

/// `Y⁺ = Y ∪ ∂Y`.
pub fn canonical_expand(graph: &GroupGraph, y: &VertexSet) -> Result<VertexSet> {
    if y.is_empty() {
        return Err(Error::Invalid("canonical expansion of the empty set".into()));
    }
    Ok(y.union(&vertex_boundary(graph, y)?))
}

pub fn canonical_chain(graph: &GroupGraph, seed: VertexSet, steps: usize) -> Result<Chain> {
    let mut sets = vec![seed];
    for _ in 0..steps {
        let next = canonical_expand(graph, sets.last().expect("nonempty"))?;
        sets.push(next);
    }
    Chain::from_sets(graph, sets)
}

/// Nested family `W_r` given as an ordering: `W_r` is the first `r` vertices.
#[derive(Clone, Debug)]
pub struct NestedFamily {
    order: Vec<Vertex>,
}

impl NestedFamily {
    pub fn from_order(order: Vec<Vertex>) -> Result<Self> {
        let distinct: HashSet<&Vertex> = order.iter().collect();
        if distinct.len() != order.len() {
            return Err(Error::Invalid("ordering repeats a vertex".into()));
        }
        Ok(Self { order })
    }

    /// Accepts `W_1 ⊂ W_2 ⊂ …` with `|W_r| = r`.
    pub fn from_sets(sets: &[VertexSet]) -> Result<Self> {
        let mut order = Vec::with_capacity(sets.len());
        let mut prev = VertexSet::new();
        for (i, w) in sets.iter().enumerate() {
            if w.len() != i + 1 || !prev.is_subset(w) {
                return Err(Error::Invalid(format!("family is not nested with |W_r| = r at r = {}", i + 1)));
            }
            order.extend(w.difference(&prev).iter().cloned());
            prev = w.clone();
        }
        Ok(Self { order })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn set(&self, r: usize) -> VertexSet {
        self.order[..r].iter().cloned().collect()
    }
}

/// Squares grown cell by cell: side `n` square, then a new column, then a new row.
pub fn z2_square_family(r_max: usize) -> NestedFamily {
    let mut order = vec![Vertex(vec![0, 0])];
    let mut n = 1i64;
    while order.len() < r_max {
        order.extend((0..n).map(|y| Vertex(vec![n, y])));
        order.extend((0..=n).map(|x| Vertex(vec![x, n])));
        n += 1;
    }
    order.truncate(r_max);
    NestedFamily { order }
}

#[derive(Clone, Debug, Serialize)]
pub struct Interleaving {
    pub chain: Chain,
    pub levels: Vec<usize>,
    /// Step indices that land on a level set `W_r`.
    pub checkpoints: Vec<usize>,
    /// `def(F; r') = r' − |F|` per step, with the `θ I^incr(|F|)` budget.
    pub deficits: Vec<(usize, f64)>,
}

/// Confined step `T_{r'}(F) = (F ∪ ∂F) ∩ W_{r'}` with budgeted levels
/// `r_{j+1} = r_j + max(1, ⌊θ I^incr(r_j)⌋)`.
pub fn interleave_from_nnm(
    graph: &GroupGraph,
    family: &NestedFamily,
    theta: f64,
    minorant: &ProfileTable,
    r_start: usize,
    r_end: usize,
) -> Result<Interleaving> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Invalid("theta must lie in (0, 1]".into()));
    }
    if r_start == 0 || r_end > family.len() || r_start > r_end {
        return Err(Error::Invalid("level range outside the family".into()));
    }
    if r_end > minorant.r_max() {
        return Err(Error::Invalid("the schedule needs the minorant on the whole level range".into()));
    }
    let mut levels = vec![r_start];
    loop {
        let r = *levels.last().expect("nonempty");
        let step = ((theta * minorant.minorant_at(r) as f64).floor() as usize).max(1);
        if r + step > r_end {
            break;
        }
        levels.push(r + step);
    }
    let mut f = family.set(r_start);
    let mut sets = vec![f.clone()];
    let mut checkpoints = vec![0];
    let mut deficits = Vec::new();
    for &target in &levels[1..] {
        let w = family.set(target);
        while f.len() < target {
            let budget = theta * minorant.minorant_at(f.len()) as f64;
            deficits.push((target - f.len(), budget));
            let grown = canonical_expand(graph, &f)?;
            let next: VertexSet = grown.iter().filter(|v| w.contains(v)).cloned().collect();
            if next.len() == f.len() {
                return Err(Error::Degenerate(format!("confined step stalled at |F| = {}", f.len())));
            }
            f = next;
            sets.push(f.clone());
        }
        checkpoints.push(sets.len() - 1);
    }
    Ok(Interleaving { chain: Chain::from_sets(graph, sets)?, levels, checkpoints, deficits })
}

/// Level sets `F_n = W_{r_n}` with `r_{n+1} = r_n + |∂W_{r_n}|`, stopping before
/// `r_end`. Each increment equals the boundary of the previous set.
pub fn decoupled_chain(
    graph: &GroupGraph,
    family: &NestedFamily,
    norm: Normalization,
    r_start: usize,
    r_end: usize,
) -> Result<Interleaving> {
    if r_start == 0 || r_end > family.len() || r_start > r_end {
        return Err(Error::Invalid("level range outside the family".into()));
    }
    let mut levels = vec![r_start];
    loop {
        let r = *levels.last().expect("nonempty");
        let b = profiles::boundary_value(graph, &family.set(r), norm)? as usize;
        if b == 0 {
            return Err(Error::Degenerate(format!("W_{r} has empty boundary")));
        }
        if r + b > r_end {
            break;
        }
        levels.push(r + b);
    }
    let sets: Vec<VertexSet> = levels.iter().map(|&r| family.set(r)).collect();
    Ok(Interleaving {
        chain: Chain::from_sets(graph, sets)?,
        checkpoints: (0..levels.len()).collect(),
        levels,
        deficits: Vec::new(),
    })
}

/// `max_r B(W_r) / I^incr_edge(r)` over the edge-profile window.
pub fn nnm_constant(graph: &GroupGraph, family: &NestedFamily, edge_profile: &ProfileTable) -> Result<f64> {
    if edge_profile.normalization != Normalization::DirectedEdge {
        return Err(Error::Invalid("NNM constant uses the edge profile".into()));
    }
    let top = edge_profile.r_max().min(family.len());
    (1..=top)
        .map(|r| {
            let b = edge_boundary_with(graph, &family.set(r), EdgeMode::DirectedPairs, Action::Right)?;
            Ok(b as f64 / edge_profile.minorant_at(r).max(1) as f64)
        })
        .try_fold(0.0f64, |m, v: Result<f64>| Ok(m.max(v?)))
}

// ---------------------------------------------------------------------------
// Lamplighter over Z

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// `Σ(n, M) = Σ_{j ≤ M} C(n, j) q^j`.
pub fn sigma(n: u64, m: u64, q: u32) -> BigUint {
    (0..=m.min(n)).map(|j| binomial(n, j) * BigUint::from(q).pow(j as u32)).sum()
}

/// Cursor exits of `U ⊂ Z` under the moves `±1`.
pub fn cursor_exits(u: &[i64]) -> u64 {
    let set: HashSet<i64> = u.iter().copied().collect();
    set.iter().map(|x| u64::from(!set.contains(&(x + 1))) + u64::from(!set.contains(&(x - 1)))).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitReport {
    pub n: u64,
    pub cursor_exits: u64,
    pub formula: BigUint,
    pub brute: Option<u64>,
    pub size: BigUint,
}

impl SplitReport {
    pub fn matches(&self) -> Option<bool> {
        self.brute.map(|b| BigUint::from(b) == self.formula)
    }
}

/// Largest block the brute-force oracle will enumerate.
pub const MAX_BLOCK: u64 = 100_000;

/// `F(U, M)`: cursor in `U`, lamps supported in `U`, at most `M` lit.
pub fn lamp_block(q: u32, u: &[i64], m: usize) -> VertexSet {
    let mut out = VertexSet::new();
    let n = u.len();
    for k in 0..=m.min(n) {
        let mut comb: Vec<usize> = (0..k).collect();
        loop {
            let mut vals = vec![1i64; k];
            loop {
                let lamps: Vec<(i64, i64)> = comb.iter().zip(&vals).map(|(&i, &v)| (u[i], v)).collect();
                for &c in u {
                    out.insert(cayley::lamplighter_element(q, c, &lamps));
                }
                let Some(pos) = vals.iter().position(|&v| v < q as i64) else { break };
                vals[pos] += 1;
                vals[..pos].iter_mut().for_each(|v| *v = 1);
            }
            if !crate::profiles::next_combination(&mut comb, n) {
                break;
            }
        }
    }
    out
}

/// Directed boundary of `F(U, M)`: `E_→(U) Σ(n, M) + t n C(n−1, M) q^M`.
pub fn lamplighter_split(u: &[i64], m: u64, q: u32, toggles: &[u32]) -> Result<SplitReport> {
    let n = u.len() as u64;
    if q == 0 || m > n {
        return Err(Error::Invalid("need q >= 1 and M <= |U|".into()));
    }
    let t = toggles.len() as u64;
    let e = cursor_exits(u);
    let s = sigma(n, m, q);
    let formula = BigUint::from(e) * &s + BigUint::from(t * n) * binomial(n.saturating_sub(1), m) * BigUint::from(q).pow(m as u32);
    let size = BigUint::from(n) * &s;
    let brute = if size <= BigUint::from(MAX_BLOCK) {
        let graph = GroupGraph::new(Family::Lamplighter { q, toggles: toggles.to_vec() })?;
        let block = lamp_block(q, u, m as usize);
        Some(edge_boundary_with(&graph, &block, EdgeMode::DirectedPairs, Action::Right)?)
    } else {
        None
    };
    Ok(SplitReport { n, cursor_exits: e, formula, brute, size })
}

#[derive(Clone, Debug, Serialize)]
pub struct RingReport {
    pub formula: BigUint,
    pub brute: u64,
}

/// Toggle exits at ring sites of `Y_ℓ` (at most `m` lit in `U`, at most `ℓ` lit
/// in the ring `R`), per toggle: `|R| C(|R|−1, ℓ) q^ℓ Σ(|U|, m)`.
pub fn ring_exits(q: u32, u: &[i64], ring: &[i64], m: usize, ell: usize) -> Result<RingReport> {
    let graph = GroupGraph::lamplighter(q);
    let (nu, nr) = (u.len() as u64, ring.len() as u64);
    let formula = BigUint::from(nr) * binomial(nr.saturating_sub(1), ell as u64) * BigUint::from(q).pow(ell as u32) * sigma(nu, m as u64, q);
    let inner = lamp_block(q, u, m);
    let outer = lamp_block(q, ring, ell);
    let mut cursor_free: Vec<Vec<(i64, i64)>> = Vec::new();
    // lamp patterns of both parts, cursor discarded
    let pattern = |v: &Vertex| v.0[1..].chunks(2).map(|p| (p[0], p[1])).collect::<Vec<_>>();
    let inner_p: HashSet<Vec<(i64, i64)>> = inner.iter().map(pattern).collect();
    let outer_p: HashSet<Vec<(i64, i64)>> = outer.iter().map(pattern).collect();
    for a in &inner_p {
        for b in &outer_p {
            let mut l = a.clone();
            l.extend(b.iter().copied());
            cursor_free.push(l);
        }
    }
    let mut y = VertexSet::new();
    for l in &cursor_free {
        for &c in u.iter().chain(ring) {
            y.insert(cayley::lamplighter_element(q, c, l));
        }
    }
    let ring_set: HashSet<i64> = ring.iter().copied().collect();
    let toggle = graph
        .generators()
        .iter()
        .position(|g| g.label.starts_with("toggle"))
        .ok_or_else(|| Error::Unsupported("lamplighter without toggles".into()))?;
    let mut brute = 0;
    for v in &y {
        if ring_set.contains(&v.0[0]) && !y.contains(&graph.act(v, toggle, Action::Right)?) {
            brute += 1;
        }
    }
    Ok(RingReport { formula, brute })
}

#[derive(Clone, Debug, Serialize)]
pub struct Checkpoint {
    pub k: u64,
    pub lamps: u64,
    pub size: BigUint,
    pub boundary: BigUint,
    pub delta: f64,
    pub delta_sqrt_n: f64,
}

/// `F*_k = F([0, k), ⌈p k⌉)` with `p = q / (1 + q)`, evaluated by formula.
pub fn lamplighter_checkpoints(k_min: u64, k_max: u64, q: u32, t: u64) -> Vec<Checkpoint> {
    (k_min.max(1)..=k_max)
        .map(|k| {
            let m = (u64::from(q) * k).div_ceil(u64::from(q) + 1);
            let s = sigma(k, m, q);
            let boundary = BigUint::from(2u32) * &s + BigUint::from(t * k) * binomial(k - 1, m) * BigUint::from(q).pow(m as u32);
            let size = BigUint::from(k) * &s;
            let ratio = BigRational::new(boundary.clone().into(), size.clone().into());
            let delta = ratio.to_f64().unwrap_or(f64::NAN);
            Checkpoint { k, lamps: m, size, boundary, delta, delta_sqrt_n: delta * (k as f64).sqrt() }
        })
        .collect()
}

/// First `k` at which `δ_k` fails to decrease strictly.
pub fn first_non_decrease(rows: &[Checkpoint]) -> Option<u64> {
    rows.windows(2).find(|w| w[1].delta >= w[0].delta).map(|w| w[1].k)
}

// ---------------------------------------------------------------------------
// Z^d ⋊_A Z

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Body {
    /// `[−1, 1]^d`.
    Cube,
    /// Euclidean unit ball.
    Ball,
    /// `ℓ¹` unit ball.
    Diamond,
}

impl Body {
    fn contains(self, x: &[f64]) -> bool {
        match self {
            Body::Cube => x.iter().all(|v| v.abs() <= 1.0),
            Body::Ball => x.iter().map(|v| v * v).sum::<f64>() <= 1.0,
            Body::Diamond => x.iter().map(|v| v.abs()).sum::<f64>() <= 1.0,
        }
    }
}

/// `X_0(R) = (R K) ∩ Z^d`.
pub fn base_slice(body: Body, d: usize, r: f64) -> Vec<Vec<i64>> {
    let b = r.floor() as i64;
    let side = (2 * b + 1) as usize;
    let shape = vec![side; d];
    crate::curlfit::cells(&shape)
        .map(|x| x.into_iter().map(|v| v as i64 - b).collect::<Vec<i64>>())
        .filter(|x| body.contains(&x.iter().map(|&v| v as f64 / r).collect::<Vec<_>>()))
        .collect()
}

pub fn matrix_power(a: &IntMatrix, k: i64) -> Result<IntMatrix> {
    if k >= 0 {
        Ok(cayley::mat_pow(a, k as u32))
    } else {
        Ok(cayley::mat_pow(&cayley::unimodular_inverse(a)?, (-k) as u32))
    }
}

/// `⋃_{|k| ≤ T} A^k X_0 × {k}`.
pub fn semidirect_stack(a: &IntMatrix, x0: &[Vec<i64>], t: u32) -> Result<VertexSet> {
    let mut out = VertexSet::new();
    for k in -(t as i64)..=t as i64 {
        let ak = matrix_power(a, k)?;
        for x in x0 {
            let mut v = cayley::mat_vec(&ak, x);
            v.push(k);
            out.insert(Vertex(v));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct LayerDiagnostics {
    pub r: f64,
    pub t: u32,
    pub base: usize,
    pub size: usize,
    pub horizontal: u64,
    pub vertical: u64,
    /// `2 |X_0|`.
    pub vertical_formula: u64,
    /// `2 |Y| / (2T + 1)`.
    pub layer_lower_bound: f64,
}

impl LayerDiagnostics {
    pub fn total(&self) -> u64 {
        self.horizontal + self.vertical
    }
}

/// Undirected boundary (left action) split into horizontal and `t^{±1}` parts.
pub fn layer_diagnostics(a: &IntMatrix, body: Body, r: f64, t: u32) -> Result<LayerDiagnostics> {
    let graph = GroupGraph::semidirect(a.clone())?;
    let d = a.len();
    let x0 = base_slice(body, d, r);
    let y = semidirect_stack(a, &x0, t)?;
    let counts = cayley::per_generator_counts_with(&graph, &y, Action::Left)?;
    let horizontal = counts[..2 * d].iter().sum();
    let vertical = counts[2 * d..].iter().sum();
    Ok(LayerDiagnostics {
        r,
        t,
        base: x0.len(),
        size: y.len(),
        horizontal,
        vertical,
        vertical_formula: 2 * x0.len() as u64,
        layer_lower_bound: 2.0 * y.len() as f64 / (2 * t + 1) as f64,
    })
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &IntMatrix) -> f64 {
    let d = a.len();
    let m = nalgebra::DMatrix::from_fn(d, d, |i, j| a[i][j] as f64);
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `Λ(A) = max(ρ(A), ρ(A⁻¹))`.
pub fn growth_rate(a: &IntMatrix) -> Result<f64> {
    Ok(spectral_radius(a).max(spectral_radius(&cayley::unimodular_inverse(a)?)))
}

#[derive(Clone, Debug, Serialize)]
pub struct CofactorGrowth {
    pub lambda: f64,
    /// `(k, ‖cof(A^k)‖_∞)`.
    pub norms: Vec<(i64, i64)>,
    /// `max_k ‖cof(A^k)‖ / Λ^{|k|}`.
    pub c_lambda: f64,
}

pub fn cofactor_growth(a: &IntMatrix, k_max: i64, lambda: f64) -> Result<CofactorGrowth> {
    let mut norms = Vec::new();
    let mut c = 0.0f64;
    for k in -k_max..=k_max {
        let cof = cayley::cofactor(&matrix_power(a, k)?);
        let n = cof.iter().map(|row| row.iter().map(|v| v.abs()).sum::<i64>()).max().unwrap_or(0);
        c = c.max(n as f64 / lambda.powi(k.unsigned_abs() as i32));
        norms.push((k, n));
    }
    Ok(CofactorGrowth { lambda, norms, c_lambda: c })
}

#[derive(Clone, Debug, Serialize)]
pub struct LogHeightRow {
    pub r: u32,
    pub t: u32,
    pub base: usize,
    pub size: usize,
    pub boundary: u64,
    pub vertical: u64,
    pub folner_ratio: f64,
    pub increment: Option<usize>,
    pub increment_ratio: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LogHeightReport {
    pub alpha: f64,
    pub lambda: f64,
    pub alpha_log_lambda: f64,
    /// `α log Λ ≥ 1`: the horizontal boundary need not be `o(|E_R|)`.
    pub non_folner_regime: bool,
    pub rows: Vec<LogHeightRow>,
    pub nested: bool,
    pub vertical_exact: bool,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// `(4c₂ + c₃) / (2c₁)` from the fitted constants.
    pub b_theory: f64,
    pub b_observed: f64,
}

/// `E_R = F_{K, R, ⌊α log R⌋}` for `R = r_min..=r_max`.
pub fn log_height_chain(a: &IntMatrix, body: Body, alpha: f64, r_min: u32, r_max: u32) -> Result<LogHeightReport> {
    if r_min < 2 || r_max < r_min {
        return Err(Error::Invalid("need 2 <= r_min <= r_max".into()));
    }
    let d = a.len();
    let lambda = growth_rate(a)?;
    let graph = GroupGraph::semidirect(a.clone())?;
    let height = |r: u32| (alpha * (r as f64).ln()).floor().max(0.0) as u32;
    let built: Vec<(u32, u32, Vec<Vec<i64>>, VertexSet)> = (r_min..=r_max + 1)
        .into_par_iter()
        .map(|r| {
            let x0 = base_slice(body, d, r as f64);
            let t = height(r);
            let y = semidirect_stack(a, &x0, t)?;
            Ok((r, t, x0, y))
        })
        .collect::<Result<_>>()?;
    let counts: Vec<Vec<u64>> = built
        .par_iter()
        .map(|(_, _, _, y)| cayley::per_generator_counts_with(&graph, y, Action::Left))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let (mut nested, mut vertical_exact) = (true, true);
    let (mut c1, mut c2, mut c3, mut b_obs) = (f64::INFINITY, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..built.len() - 1 {
        let (r, t, x0, y) = &built[i];
        let next = &built[i + 1];
        let vertical: u64 = counts[i][2 * d..].iter().sum();
        let boundary: u64 = counts[i].iter().sum();
        vertical_exact &= vertical == 2 * x0.len() as u64;
        nested &= y.is_subset(&next.3);
        let inc = next.3.difference(y).len();
        let rd = (*r as f64).powi(d as i32);
        c1 = c1.min(x0.len() as f64 / rd);
        c2 = c2.max(x0.len() as f64 / rd);
        let old: HashSet<&Vec<i64>> = x0.iter().collect();
        let ann = next.2.iter().filter(|x| !old.contains(x)).count();
        c3 = c3.max(ann as f64 / (*r as f64).powi(d as i32 - 1));
        let ratio = inc as f64 / boundary.max(1) as f64;
        b_obs = b_obs.max(ratio);
        rows.push(LogHeightRow {
            r: *r,
            t: *t,
            base: x0.len(),
            size: y.len(),
            boundary,
            vertical,
            folner_ratio: boundary as f64 / y.len() as f64,
            increment: Some(inc),
            increment_ratio: Some(ratio),
        });
    }
    let all = alpha * lambda.ln();
    Ok(LogHeightReport {
        alpha,
        lambda,
        alpha_log_lambda: all,
        non_folner_regime: all >= 1.0,
        rows,
        nested,
        vertical_exact,
        c1,
        c2,
        c3,
        b_theory: (4.0 * c2 + c3) / (2.0 * c1),
        b_observed: b_obs,
    })
}

// ---------------------------------------------------------------------------
// Balloon chain

/// Complete graphs `K_{N_1}, …, K_{N_K}` joined by single bridges between their
/// first vertices; the last balloon carries one more bridge to a phantom vertex
/// standing for the rest of an infinite chain.
#[derive(Clone, Debug, Serialize)]
pub struct BalloonGraph {
    pub sizes: Vec<usize>,
    pub offsets: Vec<usize>,
}

/// Largest vertex count handled by [`BalloonGraph`].
pub const MAX_BALLOON_VERTICES: usize = 1000;

impl BalloonGraph {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.iter().any(|&n| n < 2) {
            return Err(Error::Invalid("balloons need at least two vertices".into()));
        }
        if sizes.windows(2).any(|w| w[1] < 3 * w[0]) {
            return Err(Error::Invalid("balloon sizes must grow by a factor of at least 3".into()));
        }
        let total: usize = sizes.iter().sum();
        if total > MAX_BALLOON_VERTICES {
            return Err(Error::Resource(format!("{total} vertices exceeds {MAX_BALLOON_VERTICES}")));
        }
        let offsets = sizes
            .iter()
            .scan(0, |acc, &n| {
                let o = *acc;
                *acc += n;
                Some(o)
            })
            .collect();
        Ok(Self { sizes, offsets })
    }

    /// Vertices in balloons; the phantom vertex has this index.
    pub fn vertex_count(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn bridges(&self) -> usize {
        self.sizes.len()
    }

    /// Adjacency including the phantom vertex.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let n = self.vertex_count();
        let mut adj = vec![Vec::new(); n + 1];
        for (k, &size) in self.sizes.iter().enumerate() {
            let o = self.offsets[k];
            for i in o..o + size {
                adj[i].extend((o..o + size).filter(|&j| j != i));
            }
            let next = if k + 1 < self.sizes.len() { self.offsets[k + 1] } else { n };
            adj[o].push(next);
            adj[next].push(o);
        }
        adj
    }

    pub fn graph(&self) -> Result<GroupGraph> {
        GroupGraph::explicit(self.adjacency())
    }

    /// First `n` balloons.
    pub fn prefix(&self, n: usize) -> VertexSet {
        let end: usize = self.sizes[..n].iter().sum();
        (0..end).map(|i| Vertex(vec![i as i64])).collect()
    }

    /// `min Σ A_k (N_k − A_k)` subject to `Σ A_k = r`, `0 ≤ A_k ≤ N_k`.
    pub fn dp(&self, r: usize) -> Option<u64> {
        let total = self.vertex_count();
        if r > total {
            return None;
        }
        let mut best = vec![u64::MAX; r + 1];
        best[0] = 0;
        for &n in &self.sizes {
            let mut next = vec![u64::MAX; r + 1];
            for (have, &cost) in best.iter().enumerate() {
                if cost == u64::MAX {
                    continue;
                }
                for a in 0..=n.min(r - have) {
                    let c = cost + (a * (n - a)) as u64;
                    if c < next[have + a] {
                        next[have + a] = c;
                    }
                }
            }
            best = next;
        }
        Some(best[r])
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BalloonProfile {
    pub r: usize,
    /// `I°(r) ∈ [lower, upper]`.
    pub lower: u64,
    pub upper: u64,
    /// Upper bound on `I^incr(r)` from prefix cuts and the DP.
    pub minorant_upper: u64,
}

impl BalloonProfile {
    /// Certified lower bound on `I°(r) / I^incr(r)`.
    pub fn ratio_lower(&self) -> f64 {
        self.lower as f64 / self.minorant_upper.max(1) as f64
    }
}

pub fn balloon_profile(g: &BalloonGraph, r: usize) -> Result<BalloonProfile> {
    let total = g.vertex_count();
    let lower = g.dp(r).ok_or_else(|| Error::Invalid(format!("r = {r} exceeds {total} vertices")))?;
    let prefix_sizes: Vec<usize> = (1..=g.sizes.len()).map(|n| g.sizes[..n].iter().sum()).collect();
    let prefix_cut = if prefix_sizes.iter().any(|&s| s >= r) { 1 } else { u64::MAX };
    let dp_upper = (r..=total).filter_map(|s| g.dp(s)).map(|v| v + g.bridges() as u64).min().unwrap_or(u64::MAX);
    Ok(BalloonProfile { r, lower, upper: lower + g.bridges() as u64, minorant_upper: prefix_cut.min(dp_upper) })
}

/// Edge Cheeger constant of `K_n`: `min_{|A| ≤ n/2} |A|(n − |A|) / |A| = ⌈n/2⌉`.
pub fn complete_graph_cheeger(n: usize) -> usize {
    n - n / 2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{exact_profile, Budget};

    fn z2() -> GroupGraph {
        GroupGraph::zd_axis(2)
    }

    fn square(n: i64) -> VertexSet {
        (0..n).flat_map(|x| (0..n).map(move |y| Vertex(vec![x, y]))).collect()
    }

    #[test]
    fn squares_are_tempered() {
        let g = z2();
        let sets: Vec<VertexSet> = (1..8).map(square).collect();
        let chain = Chain::from_sets(&g, sets).unwrap();
        assert!(chain.is_nested());
        for (n, r) in (1..).zip(&chain.records[..6]) {
            assert_eq!(r.increment as i64, 2 * n + 1);
            assert_eq!(r.vertex_boundary as i64, 4 * n);
        }
        let prof = exact_profile(&g, 8, Normalization::Vertex, Budget::default()).unwrap();
        let rep = verify_tf(&g, &chain, &prof).unwrap();
        assert!(rep.b_observed.unwrap() <= 0.75 + 1e-12);
        assert!(rep.window_truncated);
        assert!(rep.consistent());
    }

    #[test]
    fn canonical_expansion_counts() {
        let g = z2();
        let one: VertexSet = [Vertex(vec![0, 0])].into_iter().collect();
        let plus = canonical_expand(&g, &one).unwrap();
        assert_eq!(plus.len(), 5);
        assert_eq!(vertex_boundary(&g, &plus).unwrap().len(), 8);
        let chain = canonical_chain(&g, square(3), 3).unwrap();
        for r in &chain.records[..3] {
            assert_eq!(r.increment as u64, r.vertex_boundary);
        }
        assert!(canonical_expand(&g, &VertexSet::new()).is_err());
    }

    #[test]
    fn interleaving_on_squares() {
        let g = z2();
        let fam = z2_square_family(8);
        let prof = exact_profile(&g, 8, Normalization::Vertex, Budget::default()).unwrap();
        let run = interleave_from_nnm(&g, &fam, 1.0, &prof, 1, 8).unwrap();
        let rep = verify_tf(&g, &run.chain, &prof).unwrap();
        assert!(rep.consistent());
        assert!(rep.b_observed.unwrap() <= 1.0);
        assert!(run.chain.records.iter().all(|r| r.size <= 8));
        for (def, budget) in &run.deficits {
            assert!(*def as f64 <= budget.max(1.0) + 1e-12);
        }
        let bad = vec![square(1), square(2)];
        assert!(NestedFamily::from_sets(&bad).is_err());
    }

    #[test]
    fn decoupled_increments_equal_boundaries() {
        let g = z2();
        let fam = z2_square_family(200);
        let prof = exact_profile(&g, 6, Normalization::Vertex, Budget::default()).unwrap();
        let run = decoupled_chain(&g, &fam, Normalization::Vertex, 1, 200).unwrap();
        assert!(run.levels.len() >= 4);
        let rep = verify_tf(&g, &run.chain, &prof).unwrap();
        assert!(rep.consistent());
        assert_eq!(rep.b_observed, Some(1.0));
        for w in run.chain.records.windows(2) {
            assert_eq!(w[0].increment as u64, w[0].vertex_boundary);
        }
    }

    #[test]
    fn lamplighter_split_example() {
        let rep = lamplighter_split(&[0, 1, 2], 1, 1, &[1]).unwrap();
        assert_eq!(rep.formula, BigUint::from(14u32));
        assert_eq!(rep.brute, Some(14));
        let full = lamplighter_split(&[0, 1, 2], 3, 2, &[1, 2]).unwrap();
        assert_eq!(full.formula, BigUint::from(2u32) * sigma(3, 3, 2));
        assert_eq!(full.matches(), Some(true));
    }

    #[test]
    fn lamplighter_split_small_instances() {
        for q in 1..=2u32 {
            for n in 1..=5usize {
                let u: Vec<i64> = (0..n as i64).collect();
                for m in 0..=n as u64 {
                    {
                        let toggles = cayley::default_toggles(q);
                        let rep = lamplighter_split(&u, m, q, &toggles).unwrap();
                        assert_eq!(rep.matches(), Some(true), "q={q} n={n} m={m}");
                    }
                }
            }
        }
        let gappy = lamplighter_split(&[0, 2, 3], 2, 2, &[1, 2]).unwrap();
        assert_eq!(gappy.cursor_exits, 4);
        assert_eq!(gappy.matches(), Some(true));
    }

    #[test]
    fn ring_count() {
        for q in 1..=2 {
            for m in 0..=2 {
                for ell in 0..=1 {
                    let rep = ring_exits(q, &[0, 1, 2], &[3, -1], m, ell).unwrap();
                    assert_eq!(BigUint::from(rep.brute), rep.formula, "q={q} m={m} l={ell}");
                }
            }
        }
    }

    #[test]
    fn checkpoints_match_blocks() {
        let rows = lamplighter_checkpoints(1, 5, 1, 1);
        for row in &rows {
            let u: Vec<i64> = (0..row.k as i64).collect();
            let rep = lamplighter_split(&u, row.lamps, 1, &[1]).unwrap();
            assert_eq!(rep.brute.map(BigUint::from), Some(row.boundary.clone()));
            assert_eq!(rep.size, row.size);
        }
        let long = lamplighter_checkpoints(4, 64, 1, 1);
        assert!(long.iter().all(|r| r.delta_sqrt_n < 3.0));
        assert!(long.last().unwrap().delta < long[0].delta);
    }

    #[test]
    fn zero_drift_and_layer_bound() {
        let a = vec![vec![2, 1], vec![1, 1]];
        let diag = layer_diagnostics(&a, Body::Cube, 20.0, 2).unwrap();
        assert_eq!(diag.vertical, diag.vertical_formula);
        assert_eq!(diag.base, 41 * 41);
        assert!(diag.total() as f64 >= diag.layer_lower_bound);
        let growth = cofactor_growth(&a, 8, growth_rate(&a).unwrap() * 1.0001).unwrap();
        assert!(growth.c_lambda.is_finite() && growth.c_lambda < 10.0);
    }

    #[test]
    fn cofactor_identity() {
        let a = vec![vec![2, 1], vec![1, 1]];
        for k in -3..=3 {
            let cof = cayley::cofactor(&matrix_power(&a, k).unwrap());
            let inv_t = cayley::transpose(&matrix_power(&a, -k).unwrap());
            let sign = if k % 2 == 0 { 1 } else { cayley::det(&a).pow(k.unsigned_abs() as u32) };
            let expect: IntMatrix = inv_t.iter().map(|r| r.iter().map(|v| v * sign).collect()).collect();
            assert_eq!(cof, expect);
        }
    }

    #[test]
    fn log_height_family() {
        let a = vec![vec![2, 1], vec![1, 1]];
        let rep = log_height_chain(&a, Body::Cube, 0.9, 4, 12).unwrap();
        assert!(rep.nested && rep.vertical_exact);
        assert!(!rep.non_folner_regime);
        assert!(rep.b_observed <= rep.b_theory);
        let hot = log_height_chain(&a, Body::Cube, 1.2, 4, 5).unwrap();
        assert!(hot.non_folner_regime);
    }

    #[test]
    fn balloon_dp_matches_brute_force() {
        let g = BalloonGraph::new(vec![2, 6]).unwrap();
        let graph = g.graph().unwrap();
        let n = g.vertex_count();
        for r in 1..=n {
            let mut best = u64::MAX;
            let mut comb: Vec<usize> = (0..r).collect();
            loop {
                let y: VertexSet = comb.iter().map(|&i| Vertex(vec![i as i64])).collect();
                best = best.min(edge_boundary_with(&graph, &y, EdgeMode::UndirectedCut, Action::Right).unwrap());
                if !crate::profiles::next_combination(&mut comb, n) {
                    break;
                }
            }
            let p = balloon_profile(&g, r).unwrap();
            assert!(p.lower <= best && best <= p.upper, "r={r}: {best} vs {p:?}");
        }
        let prefix = g.prefix(1);
        assert_eq!(edge_boundary_with(&graph, &prefix, EdgeMode::UndirectedCut, Action::Right).unwrap(), 1);
    }

    #[test]
    fn balloon_ratio_blows_up() {
        let g = BalloonGraph::new(vec![4, 12, 36]).unwrap();
        let p = balloon_profile(&g, 16 + 6).unwrap();
        assert!(p.lower >= 24);
        assert_eq!(balloon_profile(&g, 16).unwrap().minorant_upper, 1);
        assert_eq!(complete_graph_cheeger(36), 18);
        assert!(BalloonGraph::new(vec![4, 10]).is_err());
    }
}
