//! Grid total-variation energies of sampled sets against continuum anisotropic
//! perimeters, with measured convergence rates.
//!
//! Cell `x ∈ Z^d` stands for the half-open cube `h x + [0, h)^d` with `h = 1/k`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ContinuumSet {
    /// Half-open box `Π [lo_i, hi_i)`, `d ∈ {2, 3}`.
    AxisBox { lo: Vec<f64>, hi: Vec<f64> },
    Disk { center: [f64; 2], radius: f64 },
    /// Axis-aligned ellipse with semi-axes `(a, b)`.
    Ellipse { center: [f64; 2], a: f64, b: f64 },
    /// Counter-clockwise vertices.
    ConvexPolygon { vertices: Vec<[f64; 2]> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleMode {
    /// `Q_h(x) ⊂ E`.
    In,
    /// `Q_h(x) ∩ E ≠ ∅`.
    Out,
}

/// Dense occupancy grid of cells over a bounding box.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSet {
    pub k: u32,
    pub lo: Vec<i64>,
    pub dims: Vec<usize>,
    pub cells: Vec<bool>,
}

impl GridSet {
    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn h(&self) -> f64 {
        1.0 / f64::from(self.k)
    }

    pub fn len(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn offset(&self, idx: &[i64]) -> Option<usize> {
        let mut off = 0usize;
        for i in (0..self.dim()).rev() {
            let r = idx[i] - self.lo[i];
            if r < 0 || r as usize >= self.dims[i] {
                return None;
            }
            off = off * self.dims[i] + r as usize;
        }
        Some(off)
    }

    pub fn contains(&self, idx: &[i64]) -> bool {
        self.offset(idx).is_some_and(|o| self.cells[o])
    }

    fn index_of(&self, mut off: usize) -> Vec<i64> {
        let mut idx = vec![0i64; self.dim()];
        for i in 0..self.dim() {
            idx[i] = self.lo[i] + (off % self.dims[i]) as i64;
            off /= self.dims[i];
        }
        idx
    }

    pub fn members(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        self.cells.iter().enumerate().filter(|(_, &c)| c).map(|(o, _)| self.index_of(o))
    }

    pub fn is_subset(&self, other: &GridSet) -> bool {
        self.members().all(|m| other.contains(&m))
    }
}

impl ContinuumSet {
    pub fn dim(&self) -> usize {
        match self {
            ContinuumSet::AxisBox { lo, .. } => lo.len(),
            _ => 2,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            ContinuumSet::AxisBox { lo, hi } => {
                (lo.len() == 2 || lo.len() == 3)
                    && lo.len() == hi.len()
                    && lo.iter().zip(hi).all(|(a, b)| a.is_finite() && b.is_finite() && a < b)
            }
            ContinuumSet::Disk { center, radius } => {
                center.iter().all(|c| c.is_finite()) && radius.is_finite() && *radius > 0.0
            }
            ContinuumSet::Ellipse { center, a, b } => {
                center.iter().all(|c| c.is_finite()) && a.is_finite() && b.is_finite() && *a > 0.0 && *b > 0.0
            }
            ContinuumSet::ConvexPolygon { vertices } => {
                vertices.len() >= 3 && vertices.iter().flatten().all(|c| c.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid("shape must be bounded with finite, nondegenerate parameters".into()))
        }
    }

    fn bbox(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            ContinuumSet::AxisBox { lo, hi } => (lo.clone(), hi.clone()),
            ContinuumSet::Disk { center, radius } => (
                vec![center[0] - radius, center[1] - radius],
                vec![center[0] + radius, center[1] + radius],
            ),
            ContinuumSet::Ellipse { center, a, b } => {
                (vec![center[0] - a, center[1] - b], vec![center[0] + a, center[1] + b])
            }
            ContinuumSet::ConvexPolygon { vertices } => {
                let xs = vertices.iter().map(|v| v[0]);
                let ys = vertices.iter().map(|v| v[1]);
                (
                    vec![xs.clone().fold(f64::INFINITY, f64::min), ys.clone().fold(f64::INFINITY, f64::min)],
                    vec![xs.fold(f64::NEG_INFINITY, f64::max), ys.fold(f64::NEG_INFINITY, f64::max)],
                )
            }
        }
    }

    /// Does the cell `[a, b]` (closed corners) satisfy the sampling test?
    fn test_cell(&self, a: &[f64], b: &[f64], mode: SampleMode) -> bool {
        match (self, mode) {
            (ContinuumSet::AxisBox { lo, hi }, SampleMode::In) => {
                (0..lo.len()).all(|i| a[i] >= lo[i] && b[i] <= hi[i])
            }
            (ContinuumSet::AxisBox { lo, hi }, SampleMode::Out) => {
                (0..lo.len()).all(|i| a[i] < hi[i] && b[i] > lo[i])
            }
            (ContinuumSet::Disk { center, radius }, m) => {
                ellipse_test(center, *radius, *radius, a, b, m)
            }
            (ContinuumSet::Ellipse { center, a: ea, b: eb }, m) => ellipse_test(center, *ea, *eb, a, b, m),
            (ContinuumSet::ConvexPolygon { vertices }, SampleMode::In) => {
                corners2(a, b).iter().all(|c| inside_polygon(vertices, c))
            }
            (ContinuumSet::ConvexPolygon { vertices }, SampleMode::Out) => rect_meets_polygon(vertices, a, b),
        }
    }
}

fn corners2(a: &[f64], b: &[f64]) -> [[f64; 2]; 4] {
    [[a[0], a[1]], [b[0], a[1]], [b[0], b[1]], [a[0], b[1]]]
}

fn ellipse_test(c: &[f64; 2], ea: f64, eb: f64, a: &[f64], b: &[f64], mode: SampleMode) -> bool {
    let q = |x: f64, y: f64| ((x - c[0]) / ea).powi(2) + ((y - c[1]) / eb).powi(2);
    match mode {
        SampleMode::In => corners2(a, b).iter().all(|p| q(p[0], p[1]) <= 1.0),
        SampleMode::Out => {
            let nx = c[0].clamp(a[0], b[0]);
            let ny = c[1].clamp(a[1], b[1]);
            q(nx, ny) < 1.0
        }
    }
}

fn inside_polygon(v: &[[f64; 2]], p: &[f64; 2]) -> bool {
    (0..v.len()).all(|i| {
        let (s, t) = (v[i], v[(i + 1) % v.len()]);
        (t[0] - s[0]) * (p[1] - s[1]) - (t[1] - s[1]) * (p[0] - s[0]) >= 0.0
    })
}

/// Separating-axis test for interior overlap of a rectangle and a convex polygon.
fn rect_meets_polygon(v: &[[f64; 2]], a: &[f64], b: &[f64]) -> bool {
    let rect = corners2(a, b);
    let mut axes: Vec<[f64; 2]> = vec![[1.0, 0.0], [0.0, 1.0]];
    for i in 0..v.len() {
        let (s, t) = (v[i], v[(i + 1) % v.len()]);
        axes.push([s[1] - t[1], t[0] - s[0]]);
    }
    axes.iter().all(|ax| {
        let proj = |p: &[f64; 2]| p[0] * ax[0] + p[1] * ax[1];
        let (r0, r1) = rect.iter().map(proj).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
        let (p0, p1) = v.iter().map(proj).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
        r0 < p1 && p0 < r1
    })
}

/// Half-open sampler at mesh `h = 1/k`.
pub fn sample(e: &ContinuumSet, k: u32, mode: SampleMode) -> Result<GridSet> {
    e.validate()?;
    if k == 0 {
        return Err(Error::Invalid("mesh must be 1/k with k >= 1".into()));
    }
    let kf = f64::from(k);
    let (blo, bhi) = e.bbox();
    let d = e.dim();
    let lo: Vec<i64> = blo.iter().map(|x| (x * kf).floor() as i64 - 1).collect();
    let hi: Vec<i64> = bhi.iter().map(|x| (x * kf).ceil() as i64 + 1).collect();
    let dims: Vec<usize> = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as usize).collect();
    let total: usize = dims.iter().product();
    if total > 50_000_000 {
        return Err(Error::Resource(format!("{total} cells in the sampling box")));
    }
    let mut g = GridSet { k, lo, dims, cells: vec![false; total] };
    let cells: Vec<bool> = (0..total)
        .into_par_iter()
        .map(|o| {
            let idx = g.index_of(o);
            let a: Vec<f64> = idx.iter().map(|&x| x as f64 / kf).collect();
            let b: Vec<f64> = idx.iter().map(|&x| (x + 1) as f64 / kf).collect();
            e.test_cell(&a, &b, mode)
        })
        .collect();
    g.cells = cells;
    debug_assert_eq!(g.dim(), d);
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// Number of jumps along each bond direction.
    pub jumps: Vec<u64>,
    pub energy: f64,
}

/// Count `#{x : χ(x + p) ≠ χ(x)}` by scanning the padded bounding box.
pub fn bond_jumps(a: &GridSet, p: &[i64]) -> Result<u64> {
    if p.len() != a.dim() {
        return Err(Error::Invalid("bond dimension mismatch".into()));
    }
    if p.iter().all(|&x| x == 0) {
        return Err(Error::Invalid("zero bond vector".into()));
    }
    // any jump has an endpoint in A, so scan A and A - p
    let mut n = 0u64;
    for x in a.members() {
        let fwd: Vec<i64> = x.iter().zip(p).map(|(u, v)| u + v).collect();
        let bwd: Vec<i64> = x.iter().zip(p).map(|(u, v)| u - v).collect();
        n += u64::from(!a.contains(&fwd)) + u64::from(!a.contains(&bwd));
    }
    Ok(n)
}

/// `E_h = h^{d-1} Σ_i w_i #{axis-i jumps}`.
pub fn orthotropic_energy(a: &GridSet, w: &[f64]) -> Result<EnergyReport> {
    let d = a.dim();
    if w.len() != d || w.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::Invalid("one positive weight per axis".into()));
    }
    let axes: Vec<Vec<i64>> = (0..d).map(|i| (0..d).map(|j| i64::from(i == j)).collect()).collect();
    stencil_energy(a, &axes, w)
}

/// `E_h^P = h^{d-1} Σ_p α_p #{x : χ(x+p) ≠ χ(x)}`; each undirected bond counted once.
pub fn stencil_energy(a: &GridSet, bonds: &[Vec<i64>], alpha: &[f64]) -> Result<EnergyReport> {
    if bonds.len() != alpha.len() {
        return Err(Error::Invalid("one weight per bond".into()));
    }
    if alpha.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::Invalid("bond weights must be positive".into()));
    }
    let jumps: Vec<u64> = bonds.iter().map(|p| bond_jumps(a, p)).collect::<Result<_>>()?;
    let scale = a.h().powi(a.dim() as i32 - 1);
    let energy = scale * jumps.iter().zip(alpha).map(|(&j, w)| j as f64 * w).sum::<f64>();
    Ok(EnergyReport { jumps, energy })
}

/// Exposed faces of the voxel union per axis, found cell by cell.
pub fn exposed_faces(a: &GridSet) -> Vec<u64> {
    let d = a.dim();
    let mut out = vec![0u64; d];
    for x in a.members() {
        for (i, slot) in out.iter_mut().enumerate() {
            for s in [1i64, -1] {
                let mut y = x.clone();
                y[i] += s;
                if !a.contains(&y) {
                    *slot += 1;
                }
            }
        }
    }
    let _ = d;
    out
}

/// Integrand `φ(ν) = Σ_p α_p |ν · p|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Integrand {
    pub bonds: Vec<Vec<i64>>,
    pub alpha: Vec<f64>,
}

impl Integrand {
    pub fn axis(d: usize, w: &[f64]) -> Self {
        Integrand {
            bonds: (0..d).map(|i| (0..d).map(|j| i64::from(i == j)).collect()).collect(),
            alpha: w.to_vec(),
        }
    }

    pub fn eval(&self, nu: &[f64]) -> f64 {
        self.bonds
            .iter()
            .zip(&self.alpha)
            .map(|(p, a)| a * p.iter().zip(nu).map(|(x, y)| *x as f64 * y).sum::<f64>().abs())
            .sum()
    }
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `TV_φ(χ_E) = ∫_{∂E} φ(ν_E)`: closed form for boxes and polygons, quadrature (tolerance 1e-8) for curved shapes.
pub fn continuum_tv(e: &ContinuumSet, phi: &Integrand) -> Result<f64> {
    e.validate()?;
    if phi.bonds.iter().any(|p| p.len() != e.dim()) {
        return Err(Error::Invalid("integrand dimension mismatch".into()));
    }
    Ok(match e {
        ContinuumSet::AxisBox { lo, hi } => {
            let d = lo.len();
            let side: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
            (0..d)
                .map(|i| {
                    let mut nu = vec![0.0; d];
                    nu[i] = 1.0;
                    let area: f64 = (0..d).filter(|&j| j != i).map(|j| side[j]).product();
                    2.0 * phi.eval(&nu) * area
                })
                .sum()
        }
        ContinuumSet::ConvexPolygon { vertices } => (0..vertices.len())
            .map(|i| {
                let (s, t) = (vertices[i], vertices[(i + 1) % vertices.len()]);
                // outward normal times length = (dy, -dx)
                phi.eval(&[t[1] - s[1], s[0] - t[0]])
            })
            .sum(),
        ContinuumSet::Disk { radius, .. } => {
            let f = |th: f64| phi.eval(&[th.cos(), th.sin()]) * radius;
            integrate_periodic(&f)
        }
        ContinuumSet::Ellipse { a, b, .. } => {
            // γ(θ) = (a cos θ, b sin θ); ν |γ'| = (b cos θ, a sin θ)
            let f = |th: f64| phi.eval(&[b * th.cos(), a * th.sin()]);
            integrate_periodic(&f)
        }
    })
}

fn integrate_periodic<F: Fn(f64) -> f64>(f: &F) -> f64 {
    // split into many panels so kinks of |·| sit near panel edges
    let n = 64;
    let step = std::f64::consts::TAU / n as f64;
    (0..n).map(|i| adaptive_simpson(f, i as f64 * step, (i + 1) as f64 * step, 1e-8 / n as f64)).sum()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateRow {
    pub k: u32,
    pub h: f64,
    pub energy_in: f64,
    pub energy_out: f64,
    pub tv: f64,
    pub err_in: f64,
    pub err_out: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum RateFit {
    /// Zero error at every mesh.
    Exact,
    Fitted { slope: f64, constant: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub fit: RateFit,
    /// `max_h |E_h^in - E_h^out| / h`.
    pub sampler_gap_constant: f64,
    /// Smallest `C` with `min(E_in, E_out) >= TV - C h` on every mesh.
    pub liminf_constant: f64,
}

/// Least squares fit of `log|E_h(A_h^in) - TV|` against `log h`.
pub fn rate_fit(e: &ContinuumSet, phi: &Integrand, ks: &[u32]) -> Result<RateReport> {
    if ks.len() < 4 {
        return Err(Error::Invalid("need at least four meshes".into()));
    }
    let tv = continuum_tv(e, phi)?;
    let rows: Vec<RateRow> = ks
        .par_iter()
        .map(|&k| {
            let ain = sample(e, k, SampleMode::In)?;
            let aout = sample(e, k, SampleMode::Out)?;
            let ein = stencil_energy(&ain, &phi.bonds, &phi.alpha)?.energy;
            let eout = stencil_energy(&aout, &phi.bonds, &phi.alpha)?.energy;
            Ok(RateRow {
                k,
                h: 1.0 / f64::from(k),
                energy_in: ein,
                energy_out: eout,
                tv,
                err_in: (ein - tv).abs(),
                err_out: (eout - tv).abs(),
            })
        })
        .collect::<Result<_>>()?;
    let sampler_gap_constant = rows.iter().map(|r| (r.energy_in - r.energy_out).abs() / r.h).fold(0.0, f64::max);
    let liminf_constant =
        rows.iter().map(|r| (tv - r.energy_in.min(r.energy_out)) / r.h).fold(0.0, f64::max);
    let fit = if rows.iter().all(|r| r.err_in < 1e-12) {
        RateFit::Exact
    } else if rows.iter().any(|r| r.err_in < 1e-12) {
        return Err(Error::Degenerate("zero error at some meshes only; log fit undefined".into()));
    } else {
        let xs: Vec<f64> = rows.iter().map(|r| r.h.ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.err_in.ln()).collect();
        let (slope, icpt) = least_squares(&xs, &ys);
        RateFit::Fitted { slope, constant: icpt.exp() }
    };
    Ok(RateReport { rows, fit, sampler_gap_constant, liminf_constant })
}

/// Ordinary least squares `y ≈ a x + b`, returns `(a, b)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let a = sxy / sxx;
    (a, my - a * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> ContinuumSet {
        ContinuumSet::AxisBox { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }
    }

    fn unit_disk() -> ContinuumSet {
        ContinuumSet::Disk { center: [0.0, 0.0], radius: 1.0 }
    }

    #[test]
    fn aligned_square_samples() {
        let a = sample(&unit_square(), 4, SampleMode::In).unwrap();
        let b = sample(&unit_square(), 4, SampleMode::Out).unwrap();
        assert_eq!(a.len(), 16);
        assert_eq!(b.len(), 16);
        for k in [1, 3, 8, 17] {
            let a = sample(&unit_square(), k, SampleMode::In).unwrap();
            let e = orthotropic_energy(&a, &[1.0, 1.0]).unwrap();
            assert!((e.energy - 4.0).abs() < 1e-12);
            let w = orthotropic_energy(&a, &[1.0, 2.0]).unwrap();
            assert!((w.energy - 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn disk_samples_bracket_area() {
        let a = sample(&unit_disk(), 8, SampleMode::In).unwrap();
        let b = sample(&unit_disk(), 8, SampleMode::Out).unwrap();
        let target = std::f64::consts::PI * 64.0;
        assert!((a.len() as f64) < target && target < b.len() as f64);
        assert!(a.is_subset(&b));
    }

    #[test]
    fn face_identity() {
        let a = sample(&ContinuumSet::Ellipse { center: [0.1, -0.2], a: 1.3, b: 0.7 }, 16, SampleMode::Out).unwrap();
        let e = orthotropic_energy(&a, &[1.0, 1.0]).unwrap();
        assert_eq!(e.jumps, exposed_faces(&a));
    }

    #[test]
    fn tv_closed_forms() {
        let l1 = Integrand::axis(2, &[1.0, 1.0]);
        assert!((continuum_tv(&unit_square(), &l1).unwrap() - 4.0).abs() < 1e-12);
        assert!((continuum_tv(&unit_disk(), &l1).unwrap() - 8.0).abs() < 1e-8);
        let diag = Integrand { bonds: vec![vec![1, 0], vec![0, 1], vec![1, 1]], alpha: vec![1.0; 3] };
        let tv = continuum_tv(&unit_disk(), &diag).unwrap();
        assert!((tv - (8.0 + 4.0 * 2f64.sqrt())).abs() < 1e-8);
        let poly = ContinuumSet::ConvexPolygon { vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] };
        assert!((continuum_tv(&poly, &diag).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_stencil_on_square() {
        let a = sample(&unit_square(), 32, SampleMode::In).unwrap();
        let bonds = vec![vec![1, 0], vec![0, 1], vec![1, 1]];
        let e = stencil_energy(&a, &bonds, &[1.0; 3]).unwrap();
        assert!((e.energy - (8.0 - 2.0 / 32.0)).abs() < 1e-12);
        let empty = GridSet { k: 4, lo: vec![0, 0], dims: vec![2, 2], cells: vec![false; 4] };
        assert_eq!(stencil_energy(&empty, &bonds, &[1.0; 3]).unwrap().energy, 0.0);
        assert!(stencil_energy(&a, &[vec![0, 0]], &[1.0]).is_err());
    }

    #[test]
    fn aligned_square_is_exact() {
        let rep = rate_fit(&unit_square(), &Integrand::axis(2, &[1.0, 1.0]), &[16, 32, 64, 128]).unwrap();
        assert!(matches!(rep.fit, RateFit::Exact));
    }

    #[test]
    fn unbounded_rejected() {
        let bad = ContinuumSet::Disk { center: [0.0, 0.0], radius: f64::INFINITY };
        assert!(sample(&bad, 4, SampleMode::In).is_err());
    }
}
