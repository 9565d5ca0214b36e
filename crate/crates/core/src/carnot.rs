//! Gauge-column stacks in the Heisenberg group and step-2 lattices.
//!
//! A stack assigns to each footprint point `u ∈ Z^d` a half-open box of gauge
//! heights `Π_j [h_j(u), h_j(u) + ℓ_j(u))`. Boundary counts computed from the
//! per-edge interval formulas are checked against the lifted vertex set, whose
//! horizontal Cayley edges are counted straight from the group law.

use std::collections::{BTreeMap, HashSet};

use num_traits::ToPrimitive;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cayley::{edge_boundary_with, Action, EdgeMode, GroupGraph, Vertex, VertexSet};
use crate::curlfit::{self, GridComplex, Q};
use crate::error::{Error, Result};

/// Largest lifted set the direct oracle will build.
pub const MAX_LIFT: usize = 1_000_000;

/// `(x, y, z) ↦ (x, y, z − xy)`.
pub fn gauge(v: &Vertex) -> Result<(i64, i64, i64)> {
    match v.0.as_slice() {
        &[x, y, z] => Ok((x, y, z - x * y)),
        _ => Err(Error::Invalid(format!("{v:?} is not a Heisenberg element"))),
    }
}

pub fn ungauge(x: i64, y: i64, h: i64) -> Vertex {
    Vertex(vec![x, y, h + x * y])
}

/// `#([0, α) △ [t, t + β))` by the closed form `δ + 2 min(d(t), m)`.
pub fn interval_sd(alpha: u64, beta: u64, t: i64) -> u64 {
    let (a, b) = (alpha as i64, beta as i64);
    let delta = (a - b).abs();
    let m = a.min(b);
    let dt = (t - (a - b).max(0)).max(0) + (-t - (b - a).max(0)).max(0);
    (delta + 2 * dt.min(m)) as u64
}

/// `#([0, a) △ ([0, b) − τ))` in the step-2 parametrization.
pub fn halfopen_sd(a: u64, b: u64, tau: i64) -> u64 {
    let (a, b) = (a as i64, b as i64);
    let diff = a - b;
    let (dp, dm) = (diff.max(0), (-diff).max(0));
    let inner = (tau - dm).max(0) + (-tau - dp).max(0);
    (diff.abs() + 2 * a.min(b).min(inner)) as u64
}

/// Enumerates both intervals.
pub fn interval_sd_brute(alpha: u64, beta: u64, t: i64) -> u64 {
    let i: HashSet<i64> = (0..alpha as i64).collect();
    let j: HashSet<i64> = (t..t + beta as i64).collect();
    i.symmetric_difference(&j).count() as u64
}

/// `#([0, a) ∩ ([0, b) − τ))`.
pub fn overlap(a: u64, b: u64, tau: i64) -> u64 {
    let hi = (a as i64).min(b as i64 - tau);
    let lo = (-tau).max(0);
    (hi - lo).max(0) as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PerEdgeBounds {
    pub lower: i64,
    pub value: u64,
    pub upper: u64,
}

impl PerEdgeBounds {
    pub fn holds(&self) -> bool {
        self.lower <= self.value as i64 && self.value <= self.upper
    }
}

/// `2 min(|t|, A) − δ ≤ #(I △ J) ≤ δ + 2 min(|t|, A)` with `A = max(α, β)`.
pub fn per_edge_bounds(alpha: u64, beta: u64, t: i64) -> PerEdgeBounds {
    let delta = alpha.abs_diff(beta);
    let cap = t.unsigned_abs().min(alpha.max(beta));
    PerEdgeBounds {
        lower: 2 * cap as i64 - delta as i64,
        value: interval_sd(alpha, beta, t),
        upper: delta + 2 * cap,
    }
}

pub fn per_edge_bounds_check(alpha: u64, beta: u64, t: i64) -> bool {
    per_edge_bounds(alpha, beta, t).holds()
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SweepReport {
    pub cases: u64,
    /// Closed form disagreeing with enumeration.
    pub formula_mismatches: Vec<(u64, u64, i64)>,
    pub bound_violations: Vec<(u64, u64, i64)>,
    /// Cases where the upper bound is attained.
    pub upper_equalities: u64,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.formula_mismatches.is_empty() && self.bound_violations.is_empty()
    }
}

/// Exhaustive comparison over `α, β ≤ max_len`, `|t| ≤ max_shift`.
pub fn interval_sweep(max_len: u64, max_shift: i64) -> SweepReport {
    let mut rep = SweepReport::default();
    for alpha in 0..=max_len {
        for beta in 0..=max_len {
            for t in -max_shift..=max_shift {
                rep.cases += 1;
                let b = per_edge_bounds(alpha, beta, t);
                if b.value != interval_sd_brute(alpha, beta, t) || b.value != halfopen_sd(alpha, beta, -t) {
                    rep.formula_mismatches.push((alpha, beta, t));
                }
                if !b.holds() {
                    rep.bound_violations.push((alpha, beta, t));
                }
                if b.value == b.upper {
                    rep.upper_equalities += 1;
                }
            }
        }
    }
    rep
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub u: Vec<i64>,
    pub h: Vec<i64>,
    pub l: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnStack {
    pub d: usize,
    pub m: usize,
    pub columns: Vec<Column>,
}

impl ColumnStack {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for c in &self.columns {
            if c.u.len() != self.d || c.h.len() != self.m || c.l.len() != self.m {
                return Err(Error::Invalid(format!("column {:?} does not match (d, m) = ({}, {})", c.u, self.d, self.m)));
            }
            if !seen.insert(&c.u) {
                return Err(Error::Invalid(format!("duplicate column {:?}", c.u)));
            }
        }
        Ok(())
    }

    /// Nondegenerate columns keyed by base point.
    pub fn footprint(&self) -> BTreeMap<Vec<i64>, &Column> {
        self.columns
            .iter()
            .filter(|c| c.l.iter().all(|&v| v > 0))
            .map(|c| (c.u.clone(), c))
            .collect()
    }

    pub fn volume(&self) -> u64 {
        self.footprint().values().map(|c| c.l.iter().product::<u64>()).sum()
    }
}

/// Upper-triangular centre-valued cocycle `ω(e_i, e_j) ∈ Z^m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cocycle {
    pub omega: Vec<Vec<Vec<i64>>>,
}

impl Cocycle {
    pub fn new(omega: Vec<Vec<Vec<i64>>>) -> Result<Self> {
        let d = omega.len();
        let m = omega.first().and_then(|r| r.first()).map_or(0, Vec::len);
        for (i, row) in omega.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Invalid("omega must be d x d".into()));
            }
            for (j, w) in row.iter().enumerate() {
                if w.len() != m {
                    return Err(Error::Invalid("omega entries must share one rank".into()));
                }
                if j <= i && w.iter().any(|&v| v != 0) {
                    return Err(Error::Invalid("omega must be strictly upper triangular".into()));
                }
            }
        }
        Ok(Self { omega })
    }

    pub fn heisenberg() -> Self {
        Self { omega: vec![vec![vec![0], vec![1]], vec![vec![0], vec![0]]] }
    }

    pub fn d(&self) -> usize {
        self.omega.len()
    }

    pub fn m(&self) -> usize {
        self.omega.first().and_then(|r| r.first()).map_or(0, Vec::len)
    }

    /// Quadratic gauge `ζ(x) = Σ_{i<j} x_i x_j ω(e_i, e_j)`.
    pub fn zeta(&self, x: &[i64]) -> Vec<i64> {
        let mut out = vec![0; self.m()];
        for i in 0..self.d() {
            for j in i + 1..self.d() {
                for (o, w) in out.iter_mut().zip(&self.omega[i][j]) {
                    *o += x[i] * x[j] * w;
                }
            }
        }
        out
    }

    /// Alignment shift `σ_{e_k}(x) = −Σ_{j>k} x_j ω(e_k, e_j)`.
    pub fn sigma(&self, k: usize, x: &[i64]) -> Vec<i64> {
        let mut out = vec![0; self.m()];
        for j in k + 1..self.d() {
            for (o, w) in out.iter_mut().zip(&self.omega[k][j]) {
                *o -= x[j] * w;
            }
        }
        out
    }

    pub fn group(&self) -> Result<GroupGraph> {
        GroupGraph::step2(self.d(), self.m(), self.omega.clone())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct HeisDecomposition {
    pub boundary_term: u64,
    pub delta_term: u64,
    pub shear_term: u64,
    pub total: u64,
}

fn unit(d: usize, k: usize) -> Vec<i64> {
    let mut v = vec![0; d];
    v[k] = 1;
    v
}

fn shifted(u: &[i64], v: &[i64]) -> Vec<i64> {
    u.iter().zip(v).map(|(a, b)| a + b).collect()
}

/// Heisenberg shift `σ_{e_1}(x, y) = y`, `σ_{e_2} = 0`.
fn heis_sigma(k: usize, u: &[i64]) -> i64 {
    if k == 0 {
        u[1]
    } else {
        0
    }
}

/// Undirected horizontal boundary of a Heisenberg stack from the per-edge formula.
pub fn heis_decompose(stack: &ColumnStack) -> Result<HeisDecomposition> {
    if stack.d != 2 || stack.m != 1 {
        return Err(Error::Invalid("Heisenberg stacks have d = 2, m = 1".into()));
    }
    stack.validate()?;
    let fp = stack.footprint();
    let mut out = HeisDecomposition::default();
    for (u, col) in &fp {
        for k in 0..2 {
            for sign in [1, -1] {
                let v: Vec<i64> = unit(2, k).into_iter().map(|c| c * sign).collect();
                let w = shifted(u, &v);
                match fp.get(&w) {
                    None => out.boundary_term += col.l[0],
                    Some(nb) if sign == 1 => {
                        let (alpha, beta) = (col.l[0], nb.l[0]);
                        let t = nb.h[0] - col.h[0] + heis_sigma(k, u);
                        let sd = interval_sd(alpha, beta, t);
                        let delta = alpha.abs_diff(beta);
                        out.delta_term += delta;
                        out.shear_term += sd - delta;
                    }
                    Some(_) => {}
                }
            }
        }
    }
    out.total = out.boundary_term + out.delta_term + out.shear_term;
    Ok(out)
}

/// The actual vertex set `{(u, h + ζ(u)) : h ∈ I_u}`.
pub fn lift(stack: &ColumnStack, cocycle: &Cocycle) -> Result<VertexSet> {
    stack.validate()?;
    if cocycle.d() != stack.d || cocycle.m() != stack.m {
        return Err(Error::Invalid("cocycle and stack disagree on (d, m)".into()));
    }
    let vol = stack.volume();
    if vol as usize > MAX_LIFT {
        return Err(Error::Resource(format!("lift of {vol} points exceeds {MAX_LIFT}")));
    }
    let mut set = VertexSet::new();
    for col in stack.footprint().values() {
        let z = cocycle.zeta(&col.u);
        let mut idx = vec![0u64; stack.m];
        'boxes: loop {
            let mut coords = col.u.clone();
            coords.extend((0..stack.m).map(|j| col.h[j] + idx[j] as i64 + z[j]));
            set.insert(Vertex(coords));
            for j in 0..stack.m {
                idx[j] += 1;
                if idx[j] < col.l[j] {
                    continue 'boxes;
                }
                idx[j] = 0;
            }
            break;
        }
    }
    Ok(set)
}

/// Broken undirected horizontal edges of the lift, counted from the group law.
pub fn direct_boundary(stack: &ColumnStack, cocycle: &Cocycle) -> Result<u64> {
    let graph = if stack.d == 2 && stack.m == 1 && *cocycle == Cocycle::heisenberg() {
        GroupGraph::heisenberg()
    } else {
        cocycle.group()?
    };
    edge_boundary_with(&graph, &lift(stack, cocycle)?, EdgeMode::UndirectedCut, Action::Right)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Step2Bounds {
    pub lower: u64,
    pub upper: u64,
    pub direct: u64,
    /// Rank-one identity (equals `lower` and `upper` when `m = 1`).
    pub exact: Option<u64>,
}

impl Step2Bounds {
    pub fn sandwich(&self) -> bool {
        self.lower <= self.direct && self.direct <= self.upper
    }
}

/// Two-sided bounds from witness cylinders (`A_∩`) and telescoping (`A_max`).
pub fn step2_bounds(stack: &ColumnStack, cocycle: &Cocycle) -> Result<Step2Bounds> {
    let direct = direct_boundary(stack, cocycle)?;
    let fp = stack.footprint();
    let m = stack.m;
    let (mut lower, mut upper, mut exact) = (0u64, 0u64, 0u64);
    for (u, col) in &fp {
        for k in 0..stack.d {
            for sign in [1, -1] {
                let v: Vec<i64> = unit(stack.d, k).into_iter().map(|c| c * sign).collect();
                let w = shifted(u, &v);
                match fp.get(&w) {
                    None => {
                        let p: u64 = col.l.iter().product();
                        lower += p;
                        upper += p;
                        exact += p;
                    }
                    Some(nb) if sign == 1 => {
                        let sigma = cocycle.sigma(k, u);
                        let tau: Vec<i64> = (0..m).map(|j| col.h[j] - nb.h[j] + sigma[j]).collect();
                        let (a, b) = (&col.l, &nb.l);
                        for j in 0..m {
                            let sd = halfopen_sd(a[j], b[j], tau[j]);
                            let cap: u64 = (0..m).filter(|&i| i != j).map(|i| overlap(a[i], b[i], tau[i])).product();
                            let amax: u64 = (0..m).filter(|&i| i != j).map(|i| a[i].max(b[i])).product();
                            lower += sd * cap;
                            upper += sd * amax;
                        }
                        if m == 1 {
                            exact += halfopen_sd(a[0], b[0], tau[0]);
                        }
                    }
                    Some(_) => {}
                }
            }
        }
    }
    Ok(Step2Bounds { lower, upper, direct, exact: (m == 1).then_some(exact) })
}

/// Shear 1-cochain `c_{e_k} = −σ_{e_k}` for centre coordinate `coord` on the
/// grid `Π [0, n_i)`, together with its coboundary.
pub fn shear_cochain(cocycle: &Cocycle, coord: usize, n: &[usize]) -> Result<(GridComplex, curlfit::Cochain)> {
    if n.len() != cocycle.d() || coord >= cocycle.m() {
        return Err(Error::Invalid("grid dimension or centre coordinate out of range".into()));
    }
    let grid = GridComplex::new(n.to_vec())?;
    let mut c = grid.zero(1);
    for (k, shape) in grid.shapes(1).iter().enumerate() {
        for (slot, x) in curlfit::cells(shape).enumerate() {
            let xi: Vec<i64> = x.iter().map(|&v| v as i64).collect();
            c.comps[k][slot] = curlfit::simplex::q(-cocycle.sigma(k, &xi)[coord]);
        }
    }
    Ok((grid, c))
}

/// Checks that the shear cochain has constant curl `ω(e_i, e_j)` on every
/// `(i, j)` face in the `Δ_{e_j} c_i − Δ_{e_i} c_j` orientation, which is the
/// negative of the grid coboundary `d¹`.
pub fn constant_curl_check(cocycle: &Cocycle, n: &[usize]) -> Result<bool> {
    for coord in 0..cocycle.m() {
        let (grid, c) = shear_cochain(cocycle, coord, n)?;
        let dc = grid.d1(&c)?;
        for ((i, j), comp) in grid.pairs().into_iter().zip(&dc.comps) {
            let want = Q::from_integer(cocycle.omega[i][j][coord].into());
            if comp.iter().any(|v| -v != want) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Broken central edges `(x, y, z) ~ (x, y, z ± 1)` of a Heisenberg lift.
pub fn vertical_count(stack: &ColumnStack) -> Result<u64> {
    let set = lift(stack, &Cocycle::heisenberg())?;
    let mut n = 0;
    for v in &set {
        for dz in [1, -1] {
            let mut w = v.clone();
            w.0[2] += dz;
            if !set.contains(&w) {
                n += 1;
            }
        }
    }
    Ok(n)
}

/// Nonnegative integer heights on the box `Π [0, dims_i)`, zero outside.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeightField {
    pub dims: Vec<usize>,
    pub values: Vec<u64>,
}

impl HeightField {
    pub fn new(dims: Vec<usize>, values: Vec<u64>) -> Result<Self> {
        if dims.iter().product::<usize>() != values.len() {
            return Err(Error::Invalid("height field size does not match its box".into()));
        }
        Ok(Self { dims, values })
    }

    pub fn get(&self, x: &[i64]) -> u64 {
        if x.iter().zip(&self.dims).any(|(&v, &n)| v < 0 || v >= n as i64) {
            return 0;
        }
        let idx: Vec<usize> = x.iter().map(|&v| v as usize).collect();
        self.values[curlfit::flat(&self.dims, &idx)]
    }

    fn points(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        curlfit::cells(&self.dims).map(|x| x.into_iter().map(|v| v as i64).collect())
    }

    /// `Σ |ℓ(u + e_i) − ℓ(u)|` over undirected lattice edges meeting the support.
    pub fn base_variation(&self) -> u64 {
        let d = self.dims.len();
        let mut total = 0;
        for x in self.points() {
            for i in 0..d {
                let y = shifted(&x, &unit(d, i));
                total += self.get(&x).abs_diff(self.get(&y));
                let mut z = x.clone();
                z[i] -= 1;
                if z[i] < 0 {
                    total += self.get(&x);
                }
            }
        }
        total
    }

    /// `Σ_{t ≥ 0} Per({ℓ > t})`, each level counted by undirected cut edges.
    pub fn level_perimeters(&self) -> u64 {
        let d = self.dims.len();
        let top = self.values.iter().copied().max().unwrap_or(0);
        (0..top)
            .map(|t| {
                let mut per = 0;
                for x in self.points().filter(|x| self.get(x) > t) {
                    for i in 0..d {
                        for s in [1, -1] {
                            let mut y = x.clone();
                            y[i] += s;
                            if self.get(&y) <= t {
                                per += 1;
                            }
                        }
                    }
                }
                per
            })
            .sum()
    }

    pub fn coarea_check(&self) -> bool {
        self.base_variation() == self.level_perimeters()
    }
}

/// Grid perimeter (undirected cut edges) of a finite set of lattice points.
pub fn grid_perimeter(set: &HashSet<Vec<i64>>) -> u64 {
    let mut per = 0;
    for x in set {
        for i in 0..x.len() {
            for s in [1, -1] {
                let mut y = x.clone();
                y[i] += s;
                if !set.contains(&y) {
                    per += 1;
                }
            }
        }
    }
    per
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TaperParams {
    pub kappa: f64,
    pub c_star: f64,
}

impl Default for TaperParams {
    fn default() -> Self {
        Self { kappa: 0.25, c_star: 1.0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Taper {
    pub heights: HeightField,
    /// Offset of the height box in `Z^d`.
    pub origin: Vec<i64>,
    pub cap: f64,
    pub slope: u64,
    pub volume: u64,
    pub base_variation: u64,
    pub footprint_perimeter: u64,
}

impl Taper {
    /// `base_variation / (H · Per(E))`.
    pub fn bv_ratio(&self) -> f64 {
        self.base_variation as f64 / (self.cap * self.footprint_perimeter as f64)
    }
}

/// `ℓ(u) = ⌊min(H, L · dist_∞(u, Z^d ∖ E))⌋` with `H = κρ²`, `L = ⌊c_* ρ⌋`.
pub fn taper(footprint: &HashSet<Vec<i64>>, rho: u32, params: TaperParams) -> Result<Taper> {
    let Some(first) = footprint.iter().next() else {
        return Err(Error::Degenerate("empty footprint".into()));
    };
    let d = first.len();
    let lo: Vec<i64> = (0..d).map(|i| footprint.iter().map(|x| x[i]).min().unwrap_or(0)).collect();
    let hi: Vec<i64> = (0..d).map(|i| footprint.iter().map(|x| x[i]).max().unwrap_or(0)).collect();
    let dims: Vec<usize> = (0..d).map(|i| (hi[i] - lo[i] + 1) as usize).collect();
    let cap = params.kappa * (rho as f64).powi(2);
    let slope = (params.c_star * rho as f64).floor() as u64;
    // multi-source BFS in the king-move metric from the complement
    let total: usize = dims.iter().product();
    let mut dist = vec![u64::MAX; total];
    let mut frontier = Vec::new();
    let inside = |x: &[i64]| footprint.contains(x);
    let local = |x: &[i64]| -> Option<usize> {
        let idx: Option<Vec<usize>> = x
            .iter()
            .zip(&lo)
            .zip(&dims)
            .map(|((&v, &l), &n)| usize::try_from(v - l).ok().filter(|&r| r < n))
            .collect();
        idx.map(|i| curlfit::flat(&dims, &i))
    };
    let moves: Vec<Vec<i64>> = curlfit::cells(&vec![3; d])
        .map(|c| c.into_iter().map(|v| v as i64 - 1).collect::<Vec<i64>>())
        .filter(|c| c.iter().any(|&v| v != 0))
        .collect();
    for x in curlfit::cells(&dims) {
        let p: Vec<i64> = x.iter().zip(&lo).map(|(&a, &l)| a as i64 + l).collect();
        if !inside(&p) {
            continue;
        }
        if moves.iter().any(|mv| !inside(&shifted(&p, mv))) {
            dist[curlfit::flat(&dims, &x)] = 1;
            frontier.push(p);
        }
    }
    let mut level = 1;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for p in &frontier {
            for mv in &moves {
                let q = shifted(p, mv);
                if let Some(i) = local(&q) {
                    if inside(&q) && dist[i] == u64::MAX {
                        dist[i] = level + 1;
                        next.push(q);
                    }
                }
            }
        }
        frontier = next;
        level += 1;
    }
    let values: Vec<u64> = dist
        .iter()
        .map(|&dv| if dv == u64::MAX { 0 } else { cap.min((slope * dv) as f64).floor() as u64 })
        .collect();
    let heights = HeightField::new(dims, values)?;
    Ok(Taper {
        volume: heights.values.iter().sum(),
        base_variation: heights.base_variation(),
        footprint_perimeter: grid_perimeter(footprint),
        heights,
        origin: lo,
        cap,
        slope,
    })
}

/// `Σ |a_i − λ|` and `Σ |a_{i+1} − a_i|` for the lower median `λ` of a cyclic sequence.
pub fn cycle_median_gap(a: &[i64]) -> (u64, u64) {
    if a.is_empty() {
        return (0, 0);
    }
    let mut s = a.to_vec();
    s.sort_unstable();
    let lambda = s[(s.len() - 1) / 2];
    let lhs = a.iter().map(|v| v.abs_diff(lambda)).sum();
    let rhs = (0..a.len()).map(|i| a[(i + 1) % a.len()].abs_diff(a[i])).sum();
    (lhs, rhs)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum BlockRule {
    /// `L = ⌊√ρ⌋`.
    Sqrt,
    Fixed(u32),
    /// One block covering the footprint.
    Whole,
}

impl BlockRule {
    pub fn side(self, rho: u32) -> u32 {
        match self {
            BlockRule::Sqrt => ((rho as f64).sqrt().floor() as u32).max(1),
            BlockRule::Fixed(l) => l.max(1),
            BlockRule::Whole => rho.max(1),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CapLossRow {
    pub rho: u32,
    pub block: u32,
    pub blocks: usize,
    pub cross_edges: usize,
    /// `Σ (|t(e)| − max(α, β))₊` over internal edges.
    pub excess: u64,
    /// `Σ |t(e)| = Σ |c + dh|` over internal edges.
    pub surrogate: u64,
    /// Largest single-block core residual.
    pub max_core: u64,
    pub excess_norm: f64,
    pub surrogate_norm: f64,
    /// `surrogate / (Lρ² + ρ³/L)`.
    pub c0_fit: f64,
    /// Lower bound on `Σ |c + dh|` valid for every `h`, see [`stokes_floor`].
    pub floor: u64,
}

/// `Σ_k (ρ − 2k − 1)²`: the boundary loops of the nested squares `[k, ρ − k)²`
/// are edge-disjoint and each carries total shear equal to its face count, so
/// no choice of offsets brings `Σ |c + dh|` below this.
pub fn stokes_floor(rho: u32) -> u64 {
    let r = rho as i64;
    (0..)
        .map(|k| r - 2 * k - 1)
        .take_while(|&s| s > 0)
        .map(|s| (s * s) as u64)
        .sum()
}

/// Heisenberg shear `c_1(x, y) = y`, `c_2 = 0`, so that `t(e) = c(e) + dh(e)`.
fn heis_shear(k: usize, u: &[i64]) -> i64 {
    heis_sigma(k, u)
}

/// `−H¹c` of the shear restricted to the box `[lo, lo + n)`, as integers.
fn box_fit(lo: &[i64], n: &[usize]) -> Result<BTreeMap<Vec<i64>, i64>> {
    let grid = GridComplex::new(n.to_vec())?;
    let mut c = grid.zero(1);
    for (k, shape) in grid.shapes(1).iter().enumerate() {
        for (slot, x) in curlfit::cells(shape).enumerate() {
            let p: Vec<i64> = x.iter().zip(lo).map(|(&a, &l)| a as i64 + l).collect();
            c.comps[k][slot] = curlfit::simplex::q(heis_shear(k, &p));
        }
    }
    let pot = grid.h1(&c)?;
    let mut out = BTreeMap::new();
    for (slot, x) in curlfit::cells(n).enumerate() {
        let p: Vec<i64> = x.iter().zip(lo).map(|(&a, &l)| a as i64 + l).collect();
        let v = pot.comps[0][slot]
            .to_integer()
            .to_i64()
            .ok_or_else(|| Error::Resource("potential overflow".into()))?;
        out.insert(p, -v);
    }
    Ok(out)
}

/// Build integer offsets over the tapered square footprint `[0, ρ)²` by
/// blockwise potentials on tile cores (an `L × L` tile minus its last row and
/// column), a global potential on the skeleton,
/// and a median shift per block; report the resulting cap loss.
pub fn caploss(rho: u32, rule: BlockRule, params: TaperParams) -> Result<CapLossRow> {
    if rho == 0 || rho > 64 {
        return Err(Error::Resource(format!("rho = {rho} outside 1..=64")));
    }
    let r = rho as i64;
    let fp: HashSet<Vec<i64>> = (0..r).flat_map(|x| (0..r).map(move |y| vec![x, y])).collect();
    let tp = taper(&fp, rho, params)?;
    let ell = |u: &[i64]| tp.heights.get(&[u[0] - tp.origin[0], u[1] - tp.origin[1]]);
    let big_l = rule.side(rho) as i64;
    let global = box_fit(&[0, 0], &[rho as usize, rho as usize])?;

    let nb = (r + big_l - 1) / big_l;
    let mut h: BTreeMap<Vec<i64>, i64> = global.clone();
    let mut cross_total = 0;
    let mut max_core = 0u64;
    let in_block = |u: &[i64], bx: i64, by: i64| {
        u[0] >= bx * big_l && u[0] < ((bx + 1) * big_l).min(r) && u[1] >= by * big_l && u[1] < ((by + 1) * big_l).min(r)
    };
    for bx in 0..nb {
        for by in 0..nb {
            // tile minus its last row and column; those form the width-one skeleton
            let core: Vec<Vec<i64>> = fp
                .iter()
                .filter(|u| in_block(u, bx, by))
                .filter(|u| u[0] - bx * big_l < big_l - 1 && u[1] - by * big_l < big_l - 1)
                .cloned()
                .collect();
            if core.is_empty() {
                continue;
            }
            let lo = [core.iter().map(|u| u[0]).min().unwrap_or(0), core.iter().map(|u| u[1]).min().unwrap_or(0)];
            let hi = [core.iter().map(|u| u[0]).max().unwrap_or(0), core.iter().map(|u| u[1]).max().unwrap_or(0)];
            let fit = box_fit(&lo, &[(hi[0] - lo[0] + 1) as usize, (hi[1] - lo[1] + 1) as usize])?;
            let core_set: HashSet<&Vec<i64>> = core.iter().collect();
            let mut resid = 0u64;
            let mut disc = Vec::new();
            for u in &core {
                for k in 0..2 {
                    for s in [1i64, -1] {
                        let mut w = u.clone();
                        w[k] += s;
                        if core_set.contains(&w) {
                            if s == 1 {
                                resid += (heis_shear(k, u) + fit[&w] - fit[u]).unsigned_abs();
                            }
                        } else if fp.contains(&w) {
                            // c(u → w), reversed orientation for negative steps
                            let c = if s == 1 { heis_shear(k, u) } else { -heis_shear(k, &w) };
                            disc.push(c + global[&w] - fit[u]);
                        }
                    }
                }
            }
            max_core = max_core.max(resid);
            cross_total += disc.len();
            disc.sort_unstable();
            let lambda = disc.get(disc.len().saturating_sub(1) / 2).copied().unwrap_or(0);
            for u in &core {
                h.insert(u.clone(), fit[u] + lambda);
            }
        }
    }
    let (mut excess, mut surrogate) = (0u64, 0u64);
    for u in &fp {
        for k in 0..2 {
            let mut w = u.clone();
            w[k] += 1;
            if !fp.contains(&w) {
                continue;
            }
            let t = (heis_shear(k, u) + h[&w] - h[u]).unsigned_abs();
            surrogate += t;
            excess += t.saturating_sub(ell(u).max(ell(&w)));
        }
    }
    let rf = rho as f64;
    let lf = big_l as f64;
    Ok(CapLossRow {
        rho,
        block: big_l as u32,
        blocks: (nb * nb) as usize,
        cross_edges: cross_total,
        excess,
        surrogate,
        max_core,
        excess_norm: excess as f64 / rf.powi(3),
        surrogate_norm: surrogate as f64 / rf.powi(3),
        c0_fit: surrogate as f64 / (lf * rf * rf + rf.powi(3) / lf),
        floor: stokes_floor(rho),
    })
}

pub fn caploss_experiment(rhos: &[u32], rule: BlockRule, params: TaperParams) -> Result<Vec<CapLossRow>> {
    use rayon::prelude::*;
    rhos.par_iter().map(|&rho| caploss(rho, rule, params)).collect()
}

/// Random Heisenberg stack on a `side × side` box; each column is present with
/// probability one half.
pub fn random_heis_stack<R: Rng>(rng: &mut R, side: i64, max_height: u64) -> ColumnStack {
    random_box_stack(rng, 2, 1, side, max_height)
}

pub fn random_box_stack<R: Rng>(rng: &mut R, d: usize, m: usize, side: i64, max_height: u64) -> ColumnStack {
    let mut columns = Vec::new();
    for x in curlfit::cells(&vec![side as usize; d]) {
        if !rng.gen_bool(0.5) {
            continue;
        }
        columns.push(Column {
            u: x.into_iter().map(|v| v as i64).collect(),
            h: (0..m).map(|_| rng.gen_range(-(max_height as i64)..=max_height as i64)).collect(),
            l: (0..m).map(|_| rng.gen_range(0..=max_height)).collect(),
        });
    }
    ColumnStack { d, m, columns }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn column(u: [i64; 2], h: i64, l: u64) -> Column {
        Column { u: u.to_vec(), h: vec![h], l: vec![l] }
    }

    #[test]
    fn gauge_steps() {
        assert_eq!(gauge(&Vertex(vec![1, 2, 5])).unwrap(), (1, 2, 3));
        let g = GroupGraph::heisenberg();
        let p = Vertex(vec![3, -2, 7]);
        let (_, _, h) = gauge(&p).unwrap();
        let pa = g.mul(&p, g.generator_element(0)).unwrap();
        let pb = g.mul(&p, g.generator_element(2)).unwrap();
        assert_eq!(gauge(&pa).unwrap().2, h - (-2));
        assert_eq!(gauge(&pb).unwrap().2, h);
        assert_eq!(ungauge(3, -2, h), p);
    }

    #[test]
    fn interval_sanity() {
        assert_eq!(interval_sd(7, 3, 0), 4);
        assert_eq!(interval_sd(4, 3, 7), 7);
        assert_eq!(interval_sd(4, 3, -9), 7);
        assert_eq!(interval_sd(5, 5, 3), 6);
    }

    #[test]
    fn interval_exhaustive() {
        let rep = interval_sweep(20, 50);
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(rep.cases, 21 * 21 * 101);
    }

    #[test]
    fn stack_examples() {
        let oracle = |s: &ColumnStack| direct_boundary(s, &Cocycle::heisenberg()).unwrap();
        for l in 1..5 {
            let one = ColumnStack { d: 2, m: 1, columns: vec![column([0, 0], 2, l)] };
            assert_eq!(heis_decompose(&one).unwrap().total, 4 * l);
            assert_eq!(oracle(&one), 4 * l);
            let vert = ColumnStack { d: 2, m: 1, columns: vec![column([0, 0], 0, l), column([0, 1], 0, l)] };
            assert_eq!(heis_decompose(&vert).unwrap().total, 6 * l);
            assert_eq!(oracle(&vert), 6 * l);
            let horiz = ColumnStack { d: 2, m: 1, columns: vec![column([0, 1], 0, l), column([1, 1], 0, l)] };
            let dec = heis_decompose(&horiz).unwrap();
            assert_eq!(dec.total, 6 * l + 2);
            assert_eq!(oracle(&horiz), 6 * l + 2);
        }
    }

    #[test]
    fn heis_random_stacks_match_lift() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let s = random_heis_stack(&mut rng, 5, 8);
            let dec = heis_decompose(&s).unwrap();
            let st = step2_bounds(&s, &Cocycle::heisenberg()).unwrap();
            assert_eq!(dec.total, st.direct, "{s:?}");
            assert_eq!(st.exact, Some(st.direct));
            assert_eq!((st.lower, st.upper), (st.direct, st.direct));
            let ups: u64 = s.footprint().values().count() as u64 * 2;
            assert_eq!(vertical_count(&s).unwrap(), ups);
        }
    }

    #[test]
    fn rank_two_sandwich() {
        let omega = Cocycle::new(vec![vec![vec![0, 0], vec![1, 1]], vec![vec![0, 0], vec![0, 0]]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let s = random_box_stack(&mut rng, 2, 2, 4, 4);
            let b = step2_bounds(&s, &omega).unwrap();
            assert!(b.sandwich(), "{b:?}");
        }
        assert!(constant_curl_check(&omega, &[4, 5]).unwrap());
        let three = Cocycle::new(vec![
            vec![vec![0, 0], vec![1, 0], vec![0, 2]],
            vec![vec![0, 0], vec![0, 0], vec![-1, 1]],
            vec![vec![0, 0], vec![0, 0], vec![0, 0]],
        ])
        .unwrap();
        assert!(constant_curl_check(&three, &[3, 3, 3]).unwrap());
    }

    #[test]
    fn sigma_specializes() {
        let h = Cocycle::heisenberg();
        assert_eq!(h.sigma(0, &[4, 7]), vec![-7]);
        assert_eq!(h.sigma(1, &[4, 7]), vec![0]);
        assert_eq!(h.zeta(&[4, 7]), vec![28]);
    }

    #[test]
    fn coarea_on_square_and_random() {
        let mut vals = vec![0u64; 36];
        for x in 1..4 {
            for y in 1..4 {
                vals[x * 6 + y] = 1;
            }
        }
        let f = HeightField::new(vec![6, 6], vals).unwrap();
        assert_eq!(f.base_variation(), 12);
        assert!(f.coarea_check());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let f = HeightField::new(vec![8, 8], (0..64).map(|_| rng.gen_range(0..=10)).collect()).unwrap();
            assert!(f.coarea_check());
        }
    }

    #[test]
    fn taper_scales() {
        let rho = 12u32;
        let fp: HashSet<Vec<i64>> = (0..12).flat_map(|x| (0..12).map(move |y| vec![x, y])).collect();
        let t = taper(&fp, rho, TaperParams::default()).unwrap();
        assert!(t.heights.coarea_check());
        assert_eq!(t.footprint_perimeter, 48);
        assert!(t.bv_ratio() <= 1.0 + 1e-12, "{}", t.bv_ratio());
        assert_eq!(t.heights.get(&[0, 0]), 12);
        assert_eq!(t.heights.get(&[6, 6]), 36);
    }

    #[test]
    fn caploss_rows_respect_floor() {
        let rows = caploss_experiment(&[8, 16, 32], BlockRule::Sqrt, TaperParams::default()).unwrap();
        for r in &rows {
            assert!(r.surrogate >= r.floor, "{r:?}");
            assert!(r.excess <= r.surrogate);
            assert!(r.max_core <= (r.block as u64).pow(3));
        }
        assert_eq!(stokes_floor(8), 49 + 25 + 9 + 1);
        let whole = caploss(8, BlockRule::Whole, TaperParams::default()).unwrap();
        assert!(whole.max_core <= 8 * 8 * 8);
    }

    #[test]
    fn stokes_floor_grows_cubically() {
        // the floor grows like ρ³/6
        let r = stokes_floor(64) as f64 / 64f64.powi(3);
        assert!((r - 1.0 / 6.0).abs() < 0.01);
    }

    #[test]
    fn median_deviation_can_exceed_cycle_variation() {
        let ramp: Vec<i64> = (0..10).collect();
        assert_eq!(cycle_median_gap(&ramp), (25, 18));
    }

    proptest! {
        #[test]
        fn median_deviation_within_half_cycle_variation(a in prop::collection::vec(-50i64..50, 1..30)) {
            let (lhs, rhs) = cycle_median_gap(&a);
            prop_assert!(2 * lhs <= a.len() as u64 * rhs);
        }

        #[test]
        fn per_edge_bounds_hold(alpha in 0u64..40, beta in 0u64..40, t in -100i64..100) {
            prop_assert!(per_edge_bounds_check(alpha, beta, t));
            prop_assert_eq!(interval_sd(alpha, beta, t), interval_sd_brute(alpha, beta, t));
        }
    }
}
