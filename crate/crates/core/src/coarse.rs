//! Property A witnesses from Følner sets, a truncated Hilbert embedding with its
//! compression profile, and tempered constants of nested cube families.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::cayley::{edge_boundary_with, Action, EdgeMode, GroupGraph, Vertex, VertexSet};
use crate::error::{Error, Result};

/// `|xF ∩ yF| = #{f ∈ F : y⁻¹x f ∈ F}`.
fn overlap(graph: &GroupGraph, f: &VertexSet, x: &Vertex, y: &Vertex) -> Result<usize> {
    let g = graph.mul(&graph.inverse(y)?, x)?;
    let mut n = 0;
    for v in f.iter() {
        if f.contains(&graph.mul(&g, v)?) {
            n += 1;
        }
    }
    Ok(n)
}

/// `‖a_x − a_y‖₁ = |xF △ yF| / |F|` for `y = xs`.
pub fn witness_oscillation(graph: &GroupGraph, f: &VertexSet, x: &Vertex, y: &Vertex) -> Result<Ratio<u64>> {
    if f.is_empty() {
        return Err(Error::Invalid("empty witness set".into()));
    }
    if x != y && !graph.neighbors(x, Action::Right)?.iter().any(|(_, n)| n == y) {
        return Err(Error::Invalid("witness oscillation needs adjacent points".into()));
    }
    let sym = 2 * (f.len() - overlap(graph, f, x, y)?);
    Ok(Ratio::new(sym as u64, f.len() as u64))
}

/// `δ(F) = B_S(F) / |F|` with the left-action directed boundary.
pub fn folner_ratio(graph: &GroupGraph, f: &VertexSet) -> Result<f64> {
    Ok(edge_boundary_with(graph, f, EdgeMode::DirectedPairs, Action::Left)? as f64 / f.len() as f64)
}

/// Word-metric radius of `F` about the identity.
pub fn radius(graph: &GroupGraph, f: &VertexSet) -> Result<usize> {
    let mut seen = VertexSet::new();
    let mut frontier = vec![graph.identity()];
    seen.insert(graph.identity());
    let mut found = usize::from(f.contains(&graph.identity()));
    let mut r = 0;
    while found < f.len() {
        if frontier.is_empty() {
            return Err(Error::Degenerate("set not reachable from the identity".into()));
        }
        r += 1;
        let mut next = Vec::new();
        for v in &frontier {
            for (_, n) in graph.neighbors(v, Action::Right)? {
                if seen.insert(n.clone()) {
                    found += usize::from(f.contains(&n));
                    next.push(n);
                }
            }
        }
        frontier = next;
    }
    Ok(r)
}

#[derive(Clone, Debug, Serialize)]
pub struct Level {
    #[serde(skip)]
    pub set: VertexSet,
    pub size: usize,
    pub radius: usize,
    /// `δ = B_S(F) / |F|`.
    pub delta: f64,
    /// `w²`.
    pub weight_sq: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingSpec {
    pub levels: Vec<Level>,
    /// Dyadic index shift: level `j` has radius in `[2^{j+s}, 2^{j+s+1})`.
    pub shift: u32,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Distance {
    pub t: usize,
    pub value: f64,
    /// `Σ_{2R_j < t} 2 w_j²`, square-rooted.
    pub lower: f64,
    /// `(t Σ w_j² 2δ_j)^{1/2}`.
    pub upper: f64,
    /// Largest per-level gap `‖√a_x − √a_y‖² − ‖a_x − a_y‖₁`; never positive.
    pub pointwise_gap: f64,
}

impl Distance {
    pub fn within(&self) -> bool {
        self.lower <= self.value * (1.0 + 1e-12) && self.value <= self.upper * (1.0 + 1e-12) && self.pointwise_gap <= 1e-12
    }
}

impl EmbeddingSpec {
    pub fn new(graph: &GroupGraph, sets: Vec<(VertexSet, f64)>, shift: u32) -> Result<Self> {
        let levels = sets
            .into_par_iter()
            .map(|(set, weight_sq)| {
                if set.is_empty() {
                    return Err(Error::Invalid("empty level".into()));
                }
                Ok(Level { size: set.len(), radius: radius(graph, &set)?, delta: folner_ratio(graph, &set)?, weight_sq, set })
            })
            .collect::<Result<_>>()?;
        Ok(Self { levels, shift })
    }

    /// `Σ w_j² 2δ_j`: squared Lipschitz constant of `Φ`.
    pub fn lipschitz_sq(&self) -> f64 {
        self.levels.iter().map(|l| 2.0 * l.weight_sq * l.delta).sum()
    }

    /// `‖Φ(x) − Φ(y)‖` with both bounds; `t` is the word distance of `x, y`.
    pub fn distance(&self, graph: &GroupGraph, x: &Vertex, y: &Vertex, t: usize) -> Result<Distance> {
        let mut sq = 0.0;
        let mut lower = 0.0;
        let mut gap = f64::NEG_INFINITY;
        for l in &self.levels {
            let xs = l.set.translate_left(graph, x)?;
            let ys = l.set.translate_left(graph, y)?;
            let mass = 1.0 / l.size as f64;
            let (mut level_sq, mut l1) = (0.0, 0.0);
            for z in xs.union(&ys).iter() {
                let ax = if xs.contains(z) { mass } else { 0.0 };
                let ay = if ys.contains(z) { mass } else { 0.0 };
                level_sq += (ax.sqrt() - ay.sqrt()).powi(2);
                l1 += (ax - ay).abs();
            }
            gap = gap.max(level_sq - l1);
            sq += l.weight_sq * level_sq;
            if 2 * l.radius < t {
                lower += 2.0 * l.weight_sq;
            }
        }
        Ok(Distance {
            t,
            value: sq.sqrt(),
            lower: lower.sqrt(),
            upper: (t as f64 * self.lipschitz_sq()).sqrt(),
            pointwise_gap: if self.levels.is_empty() { 0.0 } else { gap },
        })
    }
}

/// `α_j² = (6/π²) 2^j / j²`.
pub fn dyadic_weight_sq(j: u32) -> f64 {
    6.0 / std::f64::consts::PI.powi(2) * 2f64.powi(j as i32) / (j as f64).powi(2)
}

/// Centered intervals `[−R_j, R_j]` on `Z` with `R_j = 2^{j+s}` and the smallest
/// shift `s` meeting `δ_j ≤ 2^{−(j+4)}` at every level.
pub fn integer_dyadic_spec(levels: u32) -> Result<EmbeddingSpec> {
    let graph = GroupGraph::zd_axis(1);
    let shift = (0..16)
        .find(|&s| (1..=levels).all(|j| 2.0 / (2.0 * 2f64.powi((j + s) as i32) + 1.0) <= 2f64.powi(-(j as i32 + 4))))
        .ok_or_else(|| Error::Infeasible("no dyadic shift below 16".into()))?;
    let sets = (1..=levels)
        .map(|j| {
            let r = 1i64 << (j + shift);
            ((-r..=r).map(|x| Vertex(vec![x])).collect(), dyadic_weight_sq(j))
        })
        .collect();
    EmbeddingSpec::new(&graph, sets, shift)
}

#[derive(Clone, Debug, Serialize)]
pub struct CompressionScan {
    pub shift: u32,
    pub rows: Vec<Distance>,
    pub c_low: f64,
    pub c_up: f64,
    /// `√3 ln 2 / (2√2 π)` and `1/(2√2)`, for comparison.
    pub reference_low: f64,
    pub reference_up: f64,
    pub bounds_hold: bool,
    /// `t` values below every level's `2R_j`.
    pub vacuous: Vec<usize>,
}

/// Distances from the origin on `Z` (the embedding is translation invariant).
pub fn compression_scan(spec: &EmbeddingSpec, ts: &[usize]) -> Result<CompressionScan> {
    let graph = GroupGraph::zd_axis(1);
    let rows: Vec<Distance> = ts
        .par_iter()
        .map(|&t| spec.distance(&graph, &Vertex(vec![0]), &Vertex(vec![t as i64]), t))
        .collect::<Result<_>>()?;
    let shape = |t: usize| (t as f64).sqrt() / (1.0 + (1.0 + t as f64).ln());
    let c_low = rows.iter().filter(|r| r.t > 0).map(|r| r.value / shape(r.t)).fold(f64::INFINITY, f64::min);
    let c_up = rows.iter().filter(|r| r.t > 0).map(|r| r.value / (r.t as f64).sqrt()).fold(0.0, f64::max);
    let pi = std::f64::consts::PI;
    Ok(CompressionScan {
        shift: spec.shift,
        bounds_hold: rows.iter().all(Distance::within),
        vacuous: rows.iter().filter(|r| r.lower == 0.0).map(|r| r.t).collect(),
        rows,
        c_low,
        c_up,
        reference_low: 3f64.sqrt() * 2f64.ln() / (2.0 * 2f64.sqrt() * pi),
        reference_up: 1.0 / (2.0 * 2f64.sqrt()),
    })
}

// ---------------------------------------------------------------------------
// Tempered constants

/// Finite subset of `Z^d` stored as a bitmap over a bounding box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeSet {
    lo: Vec<i64>,
    dims: Vec<usize>,
    bits: Vec<bool>,
}

/// Bitmap cell guard for [`LatticeSet`].
pub const MAX_LATTICE_CELLS: usize = 50_000_000;

impl LatticeSet {
    pub fn cube(d: usize, r: i64) -> Result<Self> {
        let side = (2 * r + 1) as usize;
        let cells = side.checked_pow(d as u32).filter(|&c| c <= MAX_LATTICE_CELLS).ok_or_else(|| Error::Resource("cube too large".into()))?;
        Ok(Self { lo: vec![-r; d], dims: vec![side; d], bits: vec![true; cells] })
    }

    pub fn from_points(points: &[Vec<i64>]) -> Result<Self> {
        let d = points.first().map(|p| p.len()).ok_or_else(|| Error::Invalid("empty point set".into()))?;
        let lo: Vec<i64> = (0..d).map(|i| points.iter().map(|p| p[i]).min().unwrap_or(0)).collect();
        let hi: Vec<i64> = (0..d).map(|i| points.iter().map(|p| p[i]).max().unwrap_or(0)).collect();
        let dims: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as usize).collect();
        let cells: usize = dims.iter().product();
        if cells > MAX_LATTICE_CELLS {
            return Err(Error::Resource("bounding box too large".into()));
        }
        let mut s = Self { lo, dims, bits: vec![false; cells] };
        for p in points {
            let k = s.index(p);
            s.bits[k] = true;
        }
        Ok(s)
    }

    fn index(&self, p: &[i64]) -> usize {
        p.iter().zip(&self.lo).zip(&self.dims).fold(0, |acc, ((x, l), n)| acc * n + (x - l) as usize)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<Vec<i64>> {
        crate::curlfit::cells(&self.dims)
            .zip(&self.bits)
            .filter(|(_, &b)| b)
            .map(|(x, _)| x.iter().zip(&self.lo).map(|(&i, l)| i as i64 + l).collect())
            .collect()
    }

    pub fn negate(&self) -> Self {
        let pts: Vec<Vec<i64>> = self.points().into_iter().map(|p| p.into_iter().map(|x| -x).collect()).collect();
        Self::from_points(&pts).expect("same box size")
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        let mut pts = self.points();
        pts.extend(other.points());
        Self::from_points(&pts)
    }

    /// Minkowski sum with the box `Π [−r_i, r_i]`, one axis at a time.
    pub fn dilate(&self, radii: &[i64]) -> Result<Self> {
        let mut cur = self.clone();
        for (axis, &r) in radii.iter().enumerate() {
            let mut dims = cur.dims.clone();
            dims[axis] += 2 * r as usize;
            let cells: usize = dims.iter().product();
            if cells > MAX_LATTICE_CELLS {
                return Err(Error::Resource("dilation exceeds the cell guard".into()));
            }
            let mut lo = cur.lo.clone();
            lo[axis] -= r;
            let mut out = Self { lo, dims: dims.clone(), bits: vec![false; cells] };
            let stride: usize = cur.dims[axis + 1..].iter().product();
            let n_old = cur.dims[axis];
            let n_new = dims[axis];
            let outer: usize = cur.dims[..axis].iter().product();
            let w = 2 * r as usize;
            for o in 0..outer {
                for inner in 0..stride {
                    // running count of set cells in the window [i − 2r, i] of old indices
                    let mut count = 0usize;
                    for i in 0..n_new {
                        if i < n_old && cur.bits[(o * n_old + i) * stride + inner] {
                            count += 1;
                        }
                        if i > w && i - w - 1 < n_old && cur.bits[(o * n_old + i - w - 1) * stride + inner] {
                            count -= 1;
                        }
                        out.bits[(o * n_new + i) * stride + inner] = count > 0;
                    }
                }
            }
            cur = out;
        }
        Ok(cur)
    }

    /// Minkowski sum by direct enumeration.
    pub fn minkowski_brute(&self, other: &Self) -> Result<Self> {
        let a = self.points();
        let b = other.points();
        if a.len().saturating_mul(b.len()) > MAX_LATTICE_CELLS {
            return Err(Error::Resource("brute Minkowski sum too large".into()));
        }
        let pts: Vec<Vec<i64>> = a.iter().flat_map(|p| b.iter().map(move |q| p.iter().zip(q).map(|(x, y)| x + y).collect())).collect();
        Self::from_points(&pts)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TemperedRow {
    pub k: usize,
    pub product: usize,
    pub size: usize,
    pub ratio: Ratio<u64>,
}

/// `|(⋃_{j<k} E_j⁻¹) E_k| / |E_k|` for cubes `E_k = [−2^k, 2^k]^d`; for `k = 0`
/// the union is replaced by `E_0⁻¹`.
pub fn cube_tempered_constants(d: usize, k_max: usize) -> Result<Vec<TemperedRow>> {
    (0..=k_max)
        .into_par_iter()
        .map(|k| {
            let r = 1i64 << k;
            let past = if k == 0 {
                LatticeSet::cube(d, r)?.negate()
            } else {
                (0..k).try_fold(LatticeSet::cube(d, 1)?.negate(), |acc, j| acc.union(&LatticeSet::cube(d, 1 << j)?.negate()))?
            };
            let product = past.dilate(&vec![r; d])?.len();
            let size = (2 * r as usize + 1).pow(d as u32);
            Ok(TemperedRow { k, product, size, ratio: Ratio::new(product as u64, size as u64) })
        })
        .collect()
}

/// Tempered ratios of an arbitrary nested family, by enumeration of products.
pub fn tempered_constant(graph: &GroupGraph, sets: &[VertexSet]) -> Result<Vec<Ratio<u64>>> {
    let mut past = VertexSet::new();
    let mut out = Vec::with_capacity(sets.len());
    for (k, e) in sets.iter().enumerate() {
        let left = if k == 0 { e.inverse(graph)? } else { past.clone() };
        if left.len().saturating_mul(e.len()) > MAX_LATTICE_CELLS {
            return Err(Error::Resource("product set too large".into()));
        }
        let mut prod = VertexSet::new();
        for u in left.iter() {
            for v in e.iter() {
                prod.insert(graph.mul(u, v)?);
            }
        }
        out.push(Ratio::new(prod.len() as u64, e.len() as u64));
        past = past.union(&e.inverse(graph)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn interval(lo: i64, hi: i64) -> VertexSet {
        (lo..hi).map(|x| Vertex(vec![x])).collect()
    }

    #[test]
    fn oscillation_examples() {
        let z = GroupGraph::zd_axis(1);
        let f = interval(0, 10);
        let o = Vertex(vec![0]);
        assert_eq!(witness_oscillation(&z, &f, &o, &Vertex(vec![1])).unwrap(), Ratio::new(2, 10));
        assert_eq!(witness_oscillation(&z, &f, &o, &o).unwrap(), Ratio::new(0, 1));
        assert!(witness_oscillation(&z, &f, &o, &Vertex(vec![2])).is_err());
        let z2 = GroupGraph::zd_axis(2);
        let sq: VertexSet = (0..6).flat_map(|x| (0..6).map(move |y| Vertex(vec![x, y]))).collect();
        let osc = witness_oscillation(&z2, &sq, &Vertex(vec![0, 0]), &Vertex(vec![1, 0])).unwrap();
        assert_eq!(osc, Ratio::new(12, 36));
        assert!(*osc.numer() as f64 / *osc.denom() as f64 <= 2.0 * folner_ratio(&z2, &sq).unwrap());
    }

    #[test]
    fn heisenberg_oscillation_bound() {
        let h = GroupGraph::heisenberg();
        let ball = crate::cayley::ball(&h, 2, 10_000).unwrap();
        let e = h.identity();
        let eps = 2.0 * folner_ratio(&h, &ball).unwrap();
        for (_, n) in h.neighbors(&e, Action::Right).unwrap() {
            let o = witness_oscillation(&h, &ball, &e, &n).unwrap();
            assert!(*o.numer() as f64 / *o.denom() as f64 <= eps + 1e-12);
        }
    }

    #[test]
    fn single_level_saturates() {
        let z = GroupGraph::zd_axis(1);
        let spec = EmbeddingSpec::new(&z, vec![(interval(-3, 4), 2.0)], 0).unwrap();
        let far = spec.distance(&z, &Vertex(vec![0]), &Vertex(vec![50]), 50).unwrap();
        assert!((far.value - 2.0).abs() < 1e-12);
        assert!((far.lower - 2.0).abs() < 1e-12);
        let same = spec.distance(&z, &Vertex(vec![4]), &Vertex(vec![4]), 0).unwrap();
        assert_eq!(same.value, 0.0);
    }

    #[test]
    fn cube_embedding_between_bounds() {
        let z2 = GroupGraph::zd_axis(2);
        let sets = (1..=4u32)
            .map(|j| {
                let r = 1i64 << (j + 1);
                let cube: VertexSet = (-r..=r).flat_map(|x| (-r..=r).map(move |y| Vertex(vec![x, y]))).collect();
                (cube, dyadic_weight_sq(j))
            })
            .collect();
        let spec = EmbeddingSpec::new(&z2, sets, 1).unwrap();
        let d = spec.distance(&z2, &Vertex(vec![0, 0]), &Vertex(vec![60, 40]), 100).unwrap();
        assert!(d.within(), "{d:?}");
        assert!(d.lower > 0.0);
    }

    #[test]
    fn integer_scan() {
        let spec = integer_dyadic_spec(9).unwrap();
        assert_eq!(spec.shift, 4);
        assert!(spec.levels.iter().enumerate().all(|(j, l)| l.delta <= 2f64.powi(-(j as i32 + 5))));
        let ts: Vec<usize> = (0..=40).map(|i| (10f64.powf(i as f64 / 10.0)).round() as usize).collect();
        let scan = compression_scan(&spec, &ts).unwrap();
        assert!(scan.bounds_hold);
        assert!(scan.c_low > 0.0 && scan.c_up < scan.reference_up + 1e-12);
        assert!(scan.vacuous.contains(&1));
    }

    #[test]
    fn tempered_cubes() {
        for d in 1..=3 {
            let rows = cube_tempered_constants(d, 5).unwrap();
            for row in &rows {
                assert!(row.ratio < Ratio::from_integer(1 << d));
                if row.k >= 1 {
                    let k = row.k as u32;
                    let exact = Ratio::new((3u64 << k) + 1, (2u64 << k) + 1).pow(d as i32);
                    let loose = Ratio::new((4u64 << k) + 1, (2u64 << k) + 1).pow(d as i32);
                    assert_eq!(row.ratio, exact);
                    assert!(row.ratio <= loose);
                }
            }
            assert!(rows[1..].windows(2).all(|w| w[0].ratio <= w[1].ratio));
        }
    }

    #[test]
    fn tempered_routes_agree() {
        let z2 = GroupGraph::zd_axis(2);
        let cubes: Vec<VertexSet> = (0..3)
            .map(|k| {
                let r = 1i64 << k;
                (-r..=r).flat_map(|x| (-r..=r).map(move |y| Vertex(vec![x, y]))).collect()
            })
            .collect();
        let brute = tempered_constant(&z2, &cubes).unwrap();
        let fast: Vec<Ratio<u64>> = cube_tempered_constants(2, 2).unwrap().into_iter().map(|r| r.ratio).collect();
        assert_eq!(brute, fast);
        let single = tempered_constant(&z2, &cubes[..1]).unwrap();
        assert_eq!(single[0], Ratio::new(25, 9));
    }

    proptest! {
        #[test]
        fn dilation_matches_brute_sum(pts in proptest::collection::vec((-4i64..4, -4i64..4), 1..12), r0 in 0i64..3, r1 in 0i64..3) {
            let a = LatticeSet::from_points(&pts.iter().map(|&(x, y)| vec![x, y]).collect::<Vec<_>>()).unwrap();
            let boxed: Vec<Vec<i64>> = (-r0..=r0).flat_map(|x| (-r1..=r1).map(move |y| vec![x, y])).collect();
            let b = LatticeSet::from_points(&boxed).unwrap();
            let fast = a.dilate(&[r0, r1]).unwrap();
            let slow = a.minkowski_brute(&b).unwrap();
            prop_assert_eq!(fast.points(), slow.points());
        }

        #[test]
        fn anchoring_bound(x in -300i64..300, levels in 1u32..6) {
            let z = GroupGraph::zd_axis(1);
            let spec = integer_dyadic_spec(levels).unwrap();
            let d = spec.distance(&z, &Vertex(vec![0]), &Vertex(vec![x]), x.unsigned_abs() as usize).unwrap();
            prop_assert!(d.within());
            prop_assert!(d.value <= spec.lipschitz_sq().sqrt() * x.unsigned_abs() as f64 + 1e-12);
        }
    }
}
