//! Zonotope anisotropies induced by lattice stencils, their Wulff bodies and sharp
//! constants, lattice samplers and normalized perimeter scans.

use std::collections::HashSet;

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cayley::{Vertex, VertexSet};
use crate::error::{Error, Result};

/// `τ(ξ) = Σ_v w_v |<ξ, v>|` over one representative per `±` pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anisotropy {
    pub dim: usize,
    pub reps: Vec<Vec<i64>>,
    pub weights: Vec<Rational64>,
}

fn det_i(rows: &[&Vec<i64>]) -> i64 {
    match rows.len() {
        1 => rows[0][0],
        2 => rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0],
        3 => {
            let (a, b, c) = (rows[0], rows[1], rows[2]);
            a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                + a[2] * (b[0] * c[1] - b[1] * c[0])
        }
        _ => {
            let m: Vec<Vec<i64>> = rows.iter().map(|r| (*r).clone()).collect();
            crate::cayley::det(&m)
        }
    }
}

fn primitive_signed(v: &[i64]) -> Vec<i64> {
    let g = v.iter().fold(0i64, |acc, &x| acc.gcd(&x));
    if g == 0 {
        return v.to_vec();
    }
    let mut out: Vec<i64> = v.iter().map(|x| x / g).collect();
    if out.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
        out.iter_mut().for_each(|x| *x = -*x);
    }
    out
}

fn cross(a: &[i64], b: &[i64]) -> Vec<i64> {
    vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut comb: Vec<usize> = (0..k).collect();
    loop {
        out.push(comb.clone());
        if !crate::profiles::next_combination(&mut comb, n) {
            break;
        }
    }
    out
}

impl Anisotropy {
    pub fn new(reps: Vec<Vec<i64>>, weights: Vec<Rational64>) -> Result<Self> {
        let dim = reps.first().map(Vec::len).ok_or_else(|| Error::Invalid("no representatives".into()))?;
        if reps.len() != weights.len() {
            return Err(Error::Invalid("one weight per representative".into()));
        }
        if reps.iter().any(|v| v.len() != dim || v.iter().all(|&x| x == 0)) {
            return Err(Error::Invalid("representatives must be nonzero and of equal dimension".into()));
        }
        if weights.iter().any(|w| !w.is_positive()) {
            return Err(Error::Invalid("weights must be positive".into()));
        }
        let a = Anisotropy { dim, reps, weights };
        if a.rank() < dim {
            return Err(Error::Degenerate("representatives do not span R^d; not a norm".into()));
        }
        Ok(a)
    }

    /// Unit axis anisotropy `τ = ℓ¹` (split convention, directed counting).
    pub fn axis(d: usize) -> Self {
        let reps = (0..d)
            .map(|i| (0..d).map(|j| i64::from(i == j)).collect())
            .collect();
        Anisotropy { dim: d, reps, weights: vec![Rational64::from_integer(1); d] }
    }

    /// Build from a symmetric stencil with per-generator coefficients `a_s`;
    /// the pair weight is `a_s + a_{-s}`.
    pub fn from_stencil(stencil: &[Vec<i64>], coeffs: &[Rational64]) -> Result<Self> {
        if stencil.len() != coeffs.len() {
            return Err(Error::Invalid("one coefficient per generator".into()));
        }
        let mut reps: Vec<Vec<i64>> = Vec::new();
        let mut weights: Vec<Rational64> = Vec::new();
        for (v, a) in stencil.iter().zip(coeffs) {
            let neg: Vec<i64> = v.iter().map(|x| -x).collect();
            if let Some(i) = reps.iter().position(|r| *r == *v || *r == neg) {
                weights[i] += *a;
            } else {
                reps.push(v.clone());
                weights.push(*a);
            }
        }
        Self::new(reps, weights)
    }

    fn rank(&self) -> usize {
        // rank via the largest nonvanishing minor size
        (1..=self.dim)
            .rev()
            .find(|&k| {
                subsets(self.reps.len(), k).iter().any(|s| {
                    subsets(self.dim, k).iter().any(|cols| {
                        let rows: Vec<Vec<i64>> =
                            s.iter().map(|&i| cols.iter().map(|&c| self.reps[i][c]).collect()).collect();
                        let refs: Vec<&Vec<i64>> = rows.iter().collect();
                        det_i(&refs) != 0
                    })
                })
            })
            .unwrap_or(0)
    }

    /// `τ(ξ)` for a real direction.
    pub fn gauge(&self, xi: &[f64]) -> f64 {
        self.reps
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| {
                let ip: f64 = v.iter().zip(xi).map(|(a, b)| *a as f64 * b).sum();
                w.to_f64().unwrap() * ip.abs()
            })
            .sum()
    }

    /// `τ(n)` for an integer vector, exactly.
    pub fn gauge_int(&self, n: &[i64]) -> Rational64 {
        self.reps
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| *w * Rational64::from_integer(dot(v, n).abs()))
            .sum()
    }

    /// Merge parallel representatives into a single primitive direction.
    pub fn merged(&self) -> Anisotropy {
        let mut reps: Vec<Vec<i64>> = Vec::new();
        let mut weights: Vec<Rational64> = Vec::new();
        for (v, w) in self.reps.iter().zip(&self.weights) {
            let p = primitive_signed(v);
            let scale = v.iter().zip(&p).find(|(_, b)| **b != 0).map(|(a, b)| (a / b).abs()).unwrap();
            let add = *w * Rational64::from_integer(scale);
            if let Some(i) = reps.iter().position(|r| *r == p) {
                weights[i] += add;
            } else {
                reps.push(p);
                weights.push(add);
            }
        }
        Anisotropy { dim: self.dim, reps, weights }
    }

    pub fn is_orthotropic(&self) -> bool {
        self.reps.iter().all(|v| v.iter().filter(|&&x| x != 0).count() == 1)
    }

    /// Volume of the Wulff zonotope `Σ w_v [-v, v]`.
    pub fn wulff_volume(&self) -> Rational64 {
        let d = self.dim;
        let mut total = Rational64::zero();
        for s in subsets(self.reps.len(), d) {
            let rows: Vec<&Vec<i64>> = s.iter().map(|&i| &self.reps[i]).collect();
            let dt = det_i(&rows).abs();
            if dt != 0 {
                let w: Rational64 = s.iter().map(|&i| self.weights[i]).product();
                total += w * Rational64::from_integer(dt);
            }
        }
        total * Rational64::from_integer(1i64 << d)
    }

    /// Outward facet normals (primitive integer vectors, one per `±` pair), `d <= 3`.
    pub fn facet_normals(&self) -> Result<Vec<Vec<i64>>> {
        let m = self.merged();
        let mut out: Vec<Vec<i64>> = Vec::new();
        match self.dim {
            1 => out.push(vec![1]),
            2 => {
                for v in &m.reps {
                    let n = primitive_signed(&[-v[1], v[0]]);
                    if !out.contains(&n) {
                        out.push(n);
                    }
                }
            }
            3 => {
                for i in 0..m.reps.len() {
                    for j in (i + 1)..m.reps.len() {
                        let c = cross(&m.reps[i], &m.reps[j]);
                        if c.iter().any(|&x| x != 0) {
                            let n = primitive_signed(&c);
                            if !out.contains(&n) {
                                out.push(n);
                            }
                        }
                    }
                }
            }
            _ => {
                if self.is_orthotropic() {
                    for i in 0..self.dim {
                        out.push((0..self.dim).map(|j| i64::from(i == j)).collect());
                    }
                } else {
                    return Err(Error::Unsupported(format!("facets in dimension {}", self.dim)));
                }
            }
        }
        Ok(out)
    }

    /// Anisotropic perimeter `Per_τ(W)` by summing `τ(ν_F) |F|` over facets, `d <= 3`.
    pub fn wulff_perimeter_by_facets(&self) -> Result<Rational64> {
        let m = self.merged();
        let two = Rational64::from_integer(2);
        match self.dim {
            1 => Ok(two * m.gauge_int(&[1])),
            2 => {
                let mut per = Rational64::zero();
                for n in self.facet_normals()? {
                    // generators parallel to the facet: v = c * u with u ⟂ n primitive
                    let u = vec![n[1], -n[0]];
                    let mut len_over_u = Rational64::zero();
                    for (v, w) in m.reps.iter().zip(&m.weights) {
                        if dot(v, &n) == 0 {
                            let c = v.iter().zip(&u).find(|(_, b)| **b != 0).map(|(a, b)| a / b).unwrap();
                            len_over_u += *w * Rational64::from_integer(c.abs());
                        }
                    }
                    // two opposite facets, each of length 2 Σ w|c| |u|; τ(n/|n|) = τ(n)/|n|, |n| = |u|
                    per += two * m.gauge_int(&n) * two * len_over_u;
                }
                Ok(per)
            }
            3 => {
                let mut per = Rational64::zero();
                for n in self.facet_normals()? {
                    let inplane: Vec<usize> =
                        (0..m.reps.len()).filter(|&k| dot(&m.reps[k], &n) == 0).collect();
                    let mut area_over_n = Rational64::zero();
                    for a in 0..inplane.len() {
                        for b in (a + 1)..inplane.len() {
                            let (i, j) = (inplane[a], inplane[b]);
                            let c = cross(&m.reps[i], &m.reps[j]);
                            let k = c.iter().zip(&n).find(|(_, b)| **b != 0).map(|(x, y)| x / y).unwrap_or(0);
                            area_over_n += m.weights[i] * m.weights[j] * Rational64::from_integer(k.abs());
                        }
                    }
                    per += two * m.gauge_int(&n) * Rational64::from_integer(4) * area_over_n;
                }
                Ok(per)
            }
            d => Err(Error::Unsupported(format!("facet integration in dimension {d}"))),
        }
    }

    /// Membership in `ρW` via facet inequalities `|<n,x>| <= ρ τ(n)`.
    pub fn in_scaled_body(&self, normals: &[Vec<i64>], supports: &[f64], rho: f64, x: &[i64]) -> bool {
        let _ = self;
        normals
            .iter()
            .zip(supports)
            .all(|(n, h)| (dot(n, x).abs() as f64) <= rho * h + 1e-9)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WulffConstant {
    pub volume: Rational64,
    /// `Per_τ(W)` from facet integration (`None` beyond `d = 3`).
    pub perimeter: Option<Rational64>,
    /// `d |W|^{1/d}`.
    pub closed_form: f64,
    /// `Per_τ(W) / |W|^{(d-1)/d}` from the facet route.
    pub facet_route: Option<f64>,
}

impl WulffConstant {
    pub fn value(&self) -> f64 {
        self.facet_route.unwrap_or(self.closed_form)
    }
}

/// Sharp continuum constant `c_W = Per_τ(W)/|W|^{(d-1)/d}`, computed two ways for `d <= 3`.
pub fn continuum_constant(a: &Anisotropy) -> Result<WulffConstant> {
    if a.dim > 3 && !a.is_orthotropic() {
        return Err(Error::Unsupported(format!("exact polytope arithmetic in dimension {}", a.dim)));
    }
    let volume = a.wulff_volume();
    let d = a.dim as f64;
    let vf = volume.to_f64().unwrap();
    let closed_form = d * vf.powf(1.0 / d);
    let (perimeter, facet_route) = if a.dim <= 3 {
        let p = a.wulff_perimeter_by_facets()?;
        (Some(p), Some(p.to_f64().unwrap() / vf.powf((d - 1.0) / d)))
    } else {
        (None, None)
    };
    Ok(WulffConstant { volume, perimeter, closed_form, facet_route })
}

/// `ρW ∩ Z^d`.
pub fn sampler(a: &Anisotropy, rho: f64, max_points: usize) -> Result<VertexSet> {
    if !(rho > 0.0) {
        return Err(Error::Invalid("rho must be positive".into()));
    }
    let normals = a.facet_normals()?;
    let supports: Vec<f64> = normals.iter().map(|n| a.gauge_int(n).to_f64().unwrap()).collect();
    let bounds: Vec<i64> = (0..a.dim)
        .map(|i| {
            let s: f64 = a
                .reps
                .iter()
                .zip(&a.weights)
                .map(|(v, w)| w.to_f64().unwrap() * v[i].abs() as f64)
                .sum();
            (rho * s + 1e-9).floor() as i64
        })
        .collect();
    let cand: f64 = bounds.iter().map(|&b| (2 * b + 1) as f64).product();
    if cand > max_points as f64 {
        return Err(Error::Resource(format!("sampler box has {cand:.0} candidates")));
    }
    let mut out = VertexSet::new();
    let mut x: Vec<i64> = bounds.iter().map(|b| -b).collect();
    loop {
        if a.in_scaled_body(&normals, &supports, rho, &x) {
            out.insert(Vertex(x.clone()));
        }
        let mut i = 0;
        loop {
            if i == a.dim {
                return Ok(out);
            }
            x[i] += 1;
            if x[i] <= bounds[i] {
                break;
            }
            x[i] = -bounds[i];
            i += 1;
        }
    }
}

/// Weighted directed perimeter `Σ_v w_v (#{y: y+v ∉ Y} + #{y: y-v ∉ Y})`.
pub fn weighted_perimeter(a: &Anisotropy, y: &VertexSet) -> Rational64 {
    let pts: HashSet<&[i64]> = y.iter().map(|v| v.coords()).collect();
    let mut total = Rational64::zero();
    for (v, w) in a.reps.iter().zip(&a.weights) {
        let mut cnt = 0i64;
        for p in &pts {
            let plus: Vec<i64> = p.iter().zip(v).map(|(a, b)| a + b).collect();
            let minus: Vec<i64> = p.iter().zip(v).map(|(a, b)| a - b).collect();
            cnt += i64::from(!pts.contains(plus.as_slice())) + i64::from(!pts.contains(minus.as_slice()));
        }
        total += *w * Rational64::from_integer(cnt);
    }
    total
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioRow {
    pub rho: f64,
    pub size: usize,
    pub perimeter: f64,
    pub ratio: f64,
}

/// `Per(Y_ρ) / |Y_ρ|^{(d-1)/d}` along the given dilations.
pub fn wulff_ratio_scan(a: &Anisotropy, rhos: &[f64], max_points: usize) -> Result<Vec<RatioRow>> {
    let d = a.dim as f64;
    rhos.par_iter()
        .map(|&rho| {
            let y = sampler(a, rho, max_points)?;
            let per = weighted_perimeter(a, &y).to_f64().unwrap();
            let n = y.len();
            Ok(RatioRow { rho, size: n, perimeter: per, ratio: per / (n as f64).powf((d - 1.0) / d) })
        })
        .collect()
}

/// Fiber-saturated lift of the axis sampler in `Z^d × Z_m` with vertical generators `±1`.
/// Boundary is counted directly on the lifted set.
pub fn fiber_lift_ratio(d: usize, m: u32, rhos: &[f64], max_points: usize) -> Result<Vec<RatioRow>> {
    if m == 0 || d == 0 {
        return Err(Error::Invalid("need d >= 1 and m >= 1".into()));
    }
    let base = Anisotropy::axis(d);
    let df = d as f64;
    rhos.par_iter()
        .map(|&rho| {
            let e = sampler(&base, rho, max_points)?;
            let mut lifted: HashSet<Vec<i64>> = HashSet::new();
            for u in e.iter() {
                for f in 0..i64::from(m) {
                    let mut p = u.0.clone();
                    p.push(f);
                    lifted.insert(p);
                }
            }
            let mm = i64::from(m);
            let mut bnd = 0u64;
            for p in &lifted {
                for i in 0..d {
                    for s in [1, -1] {
                        let mut q = p.clone();
                        q[i] += s;
                        bnd += u64::from(!lifted.contains(&q));
                    }
                }
                for s in [1, -1] {
                    let mut q = p.clone();
                    q[d] = (q[d] + s).rem_euclid(mm);
                    bnd += u64::from(!lifted.contains(&q));
                }
            }
            let n = lifted.len();
            Ok(RatioRow {
                rho,
                size: n,
                perimeter: bnd as f64,
                ratio: bnd as f64 / (n as f64).powf((df - 1.0) / df),
            })
        })
        .collect()
}

/// `2d m^{1/d}`.
pub fn fiber_lift_constant(d: usize, m: u32) -> f64 {
    2.0 * d as f64 * f64::from(m).powf(1.0 / d as f64)
}

/// Number of distinct lines parallel to each axis meeting `Y` (`|π_i(Y)|`).
pub fn projection_sizes(y: &VertexSet, d: usize) -> Vec<usize> {
    (0..d)
        .map(|ax| {
            y.iter()
                .map(|v| v.0.iter().enumerate().filter(|(i, _)| *i != ax).map(|(_, x)| *x).collect::<Vec<_>>())
                .collect::<HashSet<_>>()
                .len()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cayley::{edge_boundary, EdgeMode, GroupGraph};

    fn r(n: i64) -> Rational64 {
        Rational64::from_integer(n)
    }

    #[test]
    fn axis_constants() {
        for d in 1..=3 {
            let c = continuum_constant(&Anisotropy::axis(d)).unwrap();
            assert!((c.closed_form - 2.0 * d as f64).abs() < 1e-12);
            assert!((c.facet_route.unwrap() - 2.0 * d as f64).abs() < 1e-12);
        }
        let c = continuum_constant(&Anisotropy::axis(5)).unwrap();
        assert!((c.closed_form - 10.0).abs() < 1e-12);
    }

    #[test]
    fn split_weights_give_four() {
        let st = vec![vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]];
        let half = Rational64::new(1, 2);
        let a = Anisotropy::from_stencil(&st, &[half; 4]).unwrap();
        assert!((continuum_constant(&a).unwrap().value() - 4.0).abs() < 1e-12);
        let unit = Anisotropy::from_stencil(&st, &[r(1); 4]).unwrap();
        let c = continuum_constant(&unit).unwrap();
        assert_eq!(c.volume, r(16));
        assert_eq!(c.perimeter.unwrap(), r(32));
        assert!((c.value() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn hexagon_routes_agree() {
        let a = Anisotropy::new(vec![vec![1, 0], vec![0, 1], vec![1, 1]], vec![r(1); 3]).unwrap();
        let c = continuum_constant(&a).unwrap();
        assert_eq!(c.volume, r(12));
        assert!((c.closed_form - c.facet_route.unwrap()).abs() < 1e-12);
        let b = Anisotropy::new(
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1], vec![1, 1, 0], vec![0, 1, 1]],
            vec![r(1), Rational64::new(1, 2), r(2), r(1), r(1)],
        )
        .unwrap();
        let cb = continuum_constant(&b).unwrap();
        assert!((cb.closed_form - cb.facet_route.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn parallel_reps_merge() {
        let a = Anisotropy::new(vec![vec![1, 0], vec![2, 0], vec![0, 1]], vec![r(1); 3]).unwrap();
        let m = a.merged();
        assert_eq!(m.reps.len(), 2);
        assert_eq!(m.weights[0], r(3));
    }

    #[test]
    fn degenerate_rejected() {
        assert!(Anisotropy::new(vec![vec![1, 1], vec![2, 2]], vec![r(1); 2]).is_err());
    }

    #[test]
    fn sampler_square() {
        let y = sampler(&Anisotropy::axis(2), 2.5, 1 << 20).unwrap();
        assert_eq!(y.len(), 25);
        let a = sampler(&Anisotropy::axis(2), 3.0, 1 << 20).unwrap();
        assert!(y.is_subset(&a));
    }

    #[test]
    fn squares_ratio_four() {
        let rows = wulff_ratio_scan(&Anisotropy::axis(2), &[1.0, 2.0, 7.0], 1 << 20).unwrap();
        for row in rows {
            assert!((row.ratio - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fiber_lift_small() {
        let rows = fiber_lift_ratio(1, 3, &[5.0], 1 << 20).unwrap();
        assert!((rows[0].ratio - 6.0).abs() < 1e-12);
        let rows = fiber_lift_ratio(2, 1, &[5.0], 1 << 20).unwrap();
        assert!((rows[0].ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_perimeter_matches_directed_count() {
        let g = GroupGraph::zd_axis(2);
        let y: VertexSet = [vec![0, 0], vec![1, 0], vec![1, 1], vec![3, 2]]
            .into_iter()
            .map(Vertex)
            .collect();
        let p = weighted_perimeter(&Anisotropy::axis(2), &y);
        assert_eq!(p, r(edge_boundary(&g, &y, EdgeMode::DirectedPairs).unwrap() as i64));
    }
}
